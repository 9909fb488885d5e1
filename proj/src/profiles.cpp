#include <algorithm>
#include <cmath>

#include "fraq/model.hpp"

namespace fraq {

namespace {

double wrap(double x) {
  double r = std::fmod(x, kTwoPi);
  return r < 0.0 ? r + kTwoPi : r;
}

double arc_length(double a, double b) {
  if (b - a >= kTwoPi) return kTwoPi;
  double len = wrap(b - a);
  return len == 0.0 ? kTwoPi : len;
}

// exp(1 - 1/(1 - t^2)) on |t| < 1: C-infinity, value 1 at t = 0.
double bump(double t) {
  if (std::abs(t) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - t * t));
}

// Smooth step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double f = std::exp(-1.0 / t);
  const double g = std::exp(-1.0 / (1.0 - t));
  return f / (f + g);
}

double arc_bump(double x, double a, double b) {
  const double len = arc_length(a, b);
  if (len >= kTwoPi) return 1.0;
  const double half = 0.5 * len;
  const double offset = wrap(x - a);  // position inside the arc starting at a
  if (offset <= 0.0 || offset >= len) return 0.0;
  return bump((offset - half) / half);
}

// 1 on [c, d], 0 outside (a, b), smooth in between (all arcs).
double arc_cutoff(double x, double a, double b, double c, double d) {
  const double len = arc_length(a, b);
  if (len >= kTwoPi) return 1.0;
  const double lo = wrap(c - a);
  const double hi = lo + arc_length(c, d);
  if (!(lo > 0.0 && hi < len)) throw ValidationError("cutoff: inner interval must lie inside the region");
  const double s = wrap(x - a);
  if (s >= lo && s <= hi) return 1.0;
  if (s <= 0.0 || s >= len) return 0.0;
  if (s < lo) return smooth_step(s / lo);
  return smooth_step((len - s) / (len - hi));
}

double periodic_dist(double x, double y, double cx, double cy) {
  auto delta = [](double p, double c) {
    double d = std::fmod(p - c, kTwoPi);
    if (d > kPi) d -= kTwoPi;
    if (d <= -kPi) d += kTwoPi;
    return d;
  };
  const double dx = delta(x, cx);
  const double dy = delta(y, cy);
  return std::sqrt(dx * dx + dy * dy);
}

void require_dim(const TorusGrid& grid, const Region& region) {
  if (region.is_full()) throw ValidationError("profile region must be a strict subset of the torus");
  if (region.dim() != grid.dim()) throw ValidationError("profile region dimension does not match the grid");
}

double damping_value(const Region::Shape& shape, double x, double y) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Interval>) {
          return arc_bump(x, s.a, s.b);
        } else if constexpr (std::is_same_v<T, Box>) {
          return arc_bump(x, s.a1, s.b1) * arc_bump(y, s.a2, s.b2);
        } else if constexpr (std::is_same_v<T, Ball>) {
          return bump(periodic_dist(x, y, s.cx, s.cy) / s.r);
        } else if constexpr (std::is_same_v<T, Region::Complement>) {
          // 1 - plateau: zero on the closed inner set, positive right outside it
          const auto& inner = s.inner->shape();
          if (const auto* iv = std::get_if<Interval>(&inner)) return arc_bump(x, iv->b, iv->a);
          if (const auto* ball = std::get_if<Ball>(&inner)) {
            const double width = std::min(ball->r, kPi - ball->r) * 0.9;
            const double d = periodic_dist(x, y, ball->cx, ball->cy);
            return smooth_step((d - ball->r) / width);
          }
          throw ValidationError("damping profile: complement supported for intervals and balls only");
        } else {
          return 1.0;
        }
      },
      shape);
}

}  // namespace

// ------------------------------------------------------------------ damping

bool DampingProfile::is_zero() const noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

DampingProfile DampingProfile::from_values(const TorusGrid& grid, std::vector<double> values) {
  if (values.size() != grid.size()) throw ValidationError("damping profile size does not match grid");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("damping profile values must be finite and >= 0");
  }
  return DampingProfile{grid, std::move(values), std::nullopt};
}

DampingProfile DampingProfile::constant(const TorusGrid& grid, double value) {
  auto p = from_values(grid, std::vector<double>(grid.size(), value));
  if (value != 0.0) p.omega = Region(Region::Full{});
  return p;
}

DampingProfile build_damping_profile(const TorusGrid& grid, const Region& region) {
  require_dim(grid, region);
  std::vector<double> values(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    auto p = grid.point(j);
    values[j] = damping_value(region.shape(), p[0], p[1]);
  }
  auto prof = DampingProfile::from_values(grid, std::move(values));
  prof.omega = region;
  return prof;
}

// ------------------------------------------------------------------- cutoff

CutoffProfile CutoffProfile::from_values(const TorusGrid& grid, std::vector<double> values) {
  if (values.size() != grid.size()) throw ValidationError("cutoff profile size does not match grid");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("cutoff profile values must be finite");
  }
  return CutoffProfile{grid, std::move(values), std::nullopt, std::nullopt};
}

CutoffProfile CutoffProfile::constant(const TorusGrid& grid, double value) {
  auto p = from_values(grid, std::vector<double>(grid.size(), value));
  if (value != 0.0) {
    p.region = Region(Region::Full{});
    p.inner_region = Region(Region::Full{});
  }
  return p;
}

CutoffProfile build_cutoff_profile(const TorusGrid& grid, const Region& region, const Region& inner) {
  require_dim(grid, region);
  if (inner.dim() != region.dim()) throw ValidationError("cutoff: inner region dimension mismatch");
  const auto& rs = region.shape();
  const auto& is = inner.shape();
  std::vector<double> values(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    auto p = grid.point(j);
    double v = 0.0;
    if (const auto* r = std::get_if<Interval>(&rs)) {
      const auto* i = std::get_if<Interval>(&is);
      if (!i) throw ValidationError("cutoff: inner region must be an interval");
      v = arc_cutoff(p[0], r->a, r->b, i->a, i->b);
    } else if (const auto* r = std::get_if<Box>(&rs)) {
      const auto* i = std::get_if<Box>(&is);
      if (!i) throw ValidationError("cutoff: inner region must be a box");
      v = arc_cutoff(p[0], r->a1, r->b1, i->a1, i->b1) * arc_cutoff(p[1], r->a2, r->b2, i->a2, i->b2);
    } else if (const auto* r = std::get_if<Ball>(&rs)) {
      const auto* i = std::get_if<Ball>(&is);
      if (!i || periodic_dist(i->cx, i->cy, r->cx, r->cy) + i->r >= r->r) {
        throw ValidationError("cutoff: inner ball must lie inside the region ball");
      }
      const double d = periodic_dist(p[0], p[1], i->cx, i->cy);
      const double dr = periodic_dist(p[0], p[1], r->cx, r->cy);
      if (d <= i->r) v = 1.0;
      else if (dr >= r->r) v = 0.0;
      else v = smooth_step((r->r - dr) / (r->r - i->r - periodic_dist(i->cx, i->cy, r->cx, r->cy)));
    } else if (const auto* r = std::get_if<Region::Complement>(&rs)) {
      // complement of ball B_r, inner = complement of a larger concentric ball
      const auto* rb = std::get_if<Ball>(&r->inner->shape());
      const auto* ic = std::get_if<Region::Complement>(&is);
      const auto* ib = ic ? std::get_if<Ball>(&ic->inner->shape()) : nullptr;
      if (!rb || !ib || ib->cx != rb->cx || ib->cy != rb->cy || ib->r <= rb->r) {
        throw ValidationError("cutoff: complement regions must be concentric ball complements");
      }
      const double d = periodic_dist(p[0], p[1], rb->cx, rb->cy);
      v = d >= ib->r ? 1.0 : smooth_step((d - rb->r) / (ib->r - rb->r));
    } else {
      throw ValidationError("cutoff: unsupported region");
    }
    values[j] = v;
  }
  auto prof = CutoffProfile::from_values(grid, std::move(values));
  prof.region = region;
  prof.inner_region = inner;
  return prof;
}

}  // namespace fraq
