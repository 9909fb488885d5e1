#include <algorithm>
#include <cmath>
#include <limits>

#include "fraq/model.hpp"

namespace fraq {

namespace {

using Span = std::pair<double, double>;  // open time interval (lo, hi)
using SpanSet = std::vector<Span>;

constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap(double x) {
  double r = std::fmod(x, kTwoPi);
  return r < 0.0 ? r + kTwoPi : r;
}

double arc_length(double a, double b) {
  if (b - a >= kTwoPi) return kTwoPi;
  double len = wrap(b - a);
  return len == 0.0 ? kTwoPi : len;
}

SpanSet normalize(SpanSet s, double window) {
  SpanSet out;
  for (auto [lo, hi] : s) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, window);
    if (hi > lo) out.emplace_back(lo, hi);
  }
  std::sort(out.begin(), out.end());
  SpanSet merged;
  for (const auto& sp : out) {
    if (!merged.empty() && sp.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, sp.second);
    } else {
      merged.push_back(sp);
    }
  }
  return merged;
}

SpanSet intersect(const SpanSet& a, const SpanSet& b) {
  SpanSet out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].first, b[j].first);
    const double hi = std::min(a[i].second, b[j].second);
    if (hi > lo) out.emplace_back(lo, hi);
    (a[i].second < b[j].second) ? ++i : ++j;
  }
  return out;
}

// Complement of an open set inside [0, window]; boundary points of the
// original set belong to the result, which is harmless for infima.
SpanSet complement(const SpanSet& a, double window) {
  SpanSet out;
  double cursor = 0.0;
  for (const auto& [lo, hi] : a) {
    if (lo > cursor) out.emplace_back(cursor, lo);
    cursor = std::max(cursor, hi);
  }
  if (cursor < window) out.emplace_back(cursor, window);
  return out;
}

// Times in [0, window] at which x0 + t v lies in the open arc (a, b).
SpanSet arc_times(double x0, double v, double a, double b, double window) {
  const double len = arc_length(a, b);
  if (len >= kTwoPi) return {{0.0, window}};
  if (v == 0.0) {
    const double s = wrap(x0 - a);
    if (s > 0.0 && s < len) return {{0.0, window}};
    return {};
  }
  const double speed = std::abs(v);
  const double period = kTwoPi / speed;
  // first time the coordinate reaches the entering endpoint
  const double first = v > 0.0 ? wrap(a - x0) / speed : wrap(x0 - b) / speed;
  const double dwell = len / speed;
  SpanSet out;
  for (double start = first - period; start < window; start += period) {
    out.emplace_back(start, start + dwell);
  }
  return normalize(std::move(out), window);
}

// Times at which x0 + t v lies in the open ball (periodic images included).
SpanSet ball_times(const std::array<double, 2>& x0, const std::array<double, 2>& v, const Ball& ball,
                   double window) {
  SpanSet out;
  const int major = std::abs(v[0]) >= std::abs(v[1]) ? 0 : 1;
  const int minor = 1 - major;
  const double c[2] = {ball.cx, ball.cy};
  const double lo_major = std::min(x0[major], x0[major] + window * v[major]) - ball.r;
  const double hi_major = std::max(x0[major], x0[major] + window * v[major]) + ball.r;
  const int m_lo = int(std::floor((lo_major - c[major]) / kTwoPi)) - 1;
  const int m_hi = int(std::ceil((hi_major - c[major]) / kTwoPi)) + 1;
  for (int m = m_lo; m <= m_hi; ++m) {
    const double cm = c[major] + kTwoPi * m;
    // time window where the major coordinate is within r of the image
    double t_a = (cm - ball.r - x0[major]) / v[major];
    double t_b = (cm + ball.r - x0[major]) / v[major];
    if (t_a > t_b) std::swap(t_a, t_b);
    if (t_b < 0.0 || t_a > window) continue;
    const double y_a = x0[minor] + t_a * v[minor];
    const double y_b = x0[minor] + t_b * v[minor];
    const double y_lo = std::min(y_a, y_b) - ball.r;
    const double y_hi = std::max(y_a, y_b) + ball.r;
    const int n_lo = int(std::floor((y_lo - c[minor]) / kTwoPi)) - 1;
    const int n_hi = int(std::ceil((y_hi - c[minor]) / kTwoPi)) + 1;
    for (int q = n_lo; q <= n_hi; ++q) {
      double cc[2];
      cc[major] = cm;
      cc[minor] = c[minor] + kTwoPi * q;
      const double dx = cc[0] - x0[0];
      const double dy = cc[1] - x0[1];
      const double tc = dx * v[0] + dy * v[1];
      const double perp2 = dx * dx + dy * dy - tc * tc;
      const double h2 = ball.r * ball.r - perp2;
      if (h2 <= 0.0) continue;
      const double h = std::sqrt(h2);
      out.emplace_back(tc - h, tc + h);
    }
  }
  return normalize(std::move(out), window);
}

SpanSet ball_times_axis(const std::array<double, 2>& x0, const std::array<double, 2>& v, const Ball& ball,
                        double window) {
  if (v[0] == 0.0 && v[1] == 0.0) return {};
  return ball_times(x0, v, ball, window);
}

SpanSet region_times(const Region& region, const std::array<double, 2>& x0, const std::array<double, 2>& v,
                     double window) {
  return std::visit(
      [&](const auto& s) -> SpanSet {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Region::Full>) {
          return {{0.0, window}};
        } else if constexpr (std::is_same_v<T, Interval>) {
          return arc_times(x0[0], v[0], s.a, s.b, window);
        } else if constexpr (std::is_same_v<T, Box>) {
          return intersect(arc_times(x0[0], v[0], s.a1, s.b1, window),
                           arc_times(x0[1], v[1], s.a2, s.b2, window));
        } else if constexpr (std::is_same_v<T, Ball>) {
          return ball_times_axis(x0, v, s, window);
        } else {
          return complement(region_times(*s.inner, x0, v, window), window);
        }
      },
      region.shape());
}

double first_entry(const Region& omega, const std::array<double, 2>& x0, const std::array<double, 2>& v,
                   double t0, double horizon) {
  double window = std::min(std::max(t0, 1.0), horizon);
  while (true) {
    auto s = region_times(omega, x0, v, window);
    if (!s.empty()) return s.front().first;
    if (window >= horizon) return kInf;
    window = std::min(2.0 * window, horizon);
  }
}

std::array<double, 2> direction(int dim, int j, int n_dirs) {
  if (dim == 1) return {j % 2 == 0 ? 1.0 : -1.0, 0.0};
  const double ang = kTwoPi * j / n_dirs;
  std::array<double, 2> d{std::cos(ang), std::sin(ang)};
  for (auto& c : d) {
    if (std::abs(c) < 1e-12) c = 0.0;
    if (std::abs(std::abs(c) - 1.0) < 1e-12) c = std::copysign(1.0, c);
  }
  return d;
}

std::vector<std::array<double, 2>> start_points(int dim, int n_starts) {
  std::vector<std::array<double, 2>> pts;
  if (dim == 1) {
    for (int i = 0; i < n_starts; ++i) pts.push_back({kTwoPi * i / n_starts, 0.0});
    return pts;
  }
  const int side = int(std::lround(std::sqrt(double(n_starts))));
  if (side * side == n_starts) {
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) pts.push_back({kTwoPi * i / side, kTwoPi * j / side});
    return pts;
  }
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < n_starts; ++i) {
    double frac = std::fmod(i * golden, 1.0);
    pts.push_back({kTwoPi * i / n_starts, kTwoPi * frac});
  }
  return pts;
}

}  // namespace

GccReport check_gcc(const Region& omega, double t0, int n_dirs, int n_starts, std::optional<double> horizon) {
  if (!(t0 > 0.0)) throw ValidationError("gcc.t0 must be positive");
  if (n_dirs < 1 || n_starts < 1) throw ValidationError("gcc sampling counts must be >= 1");
  const int dim = omega.dim();
  if (dim != 1 && dim != 2) throw ValidationError("gcc: region has no dimension (use an explicit shape)");
  if (dim == 1) n_dirs = std::min(n_dirs, 2);
  const double h = horizon.value_or(std::max(2.0 * t0, kTwoPi * std::max(n_dirs, 8)));

  GccReport rep;
  rep.t0 = t0;
  rep.n_dirs = n_dirs;
  rep.n_starts = n_starts;
  rep.worst_entry_time = -1.0;
  const auto starts = start_points(dim, n_starts);
  for (int j = 0; j < n_dirs; ++j) {
    const auto v = direction(dim, j, n_dirs);
    for (const auto& x0 : starts) {
      const double t = first_entry(omega, x0, v, t0, h);
      if (t > rep.worst_entry_time) {
        rep.worst_entry_time = t;
        rep.witness_start = x0;
        rep.witness_direction = v;
      }
    }
  }
  rep.satisfied = rep.worst_entry_time < t0;
  return rep;
}

}  // namespace fraq
