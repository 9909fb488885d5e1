#include "fraq/strichartz.hpp"

#include <cmath>
#include <sstream>

#include "fraq/dynamics.hpp"

namespace fraq {

namespace {

double inverse(double x) { return std::isinf(x) ? 0.0 : 1.0 / x; }

std::string show(double x) {
  if (std::isinf(x)) return "inf";
  std::ostringstream os;
  os << x;
  return os.str();
}

double lq_norm(const NodalValues& vals, double q, double cell) {
  if (std::isinf(q)) {
    double m = 0.0;
    for (const auto& z : vals) m = std::max(m, std::abs(z));
    return m;
  }
  double acc = 0.0;
  for (const auto& z : vals) acc += std::pow(std::abs(z), q);
  return std::pow(cell * acc, 1.0 / q);
}

}  // namespace

PairCheck check_pair(double p, double q, int d) {
  PairCheck c;
  if (d != 1 && d != 2) c.violations.push_back("d must be 1 or 2");
  if (std::isnan(p) || !(p >= 2.0)) c.violations.push_back("p must lie in [2, inf]");
  if (std::isnan(q) || !(q >= 2.0)) c.violations.push_back("q must lie in [2, inf]");
  if (p == 2.0 && std::isinf(q) && d == 2) c.violations.push_back("(p, q, d) = (2, inf, 2) is excluded");
  if (c.violations.empty()) {
    const double gap = 2.0 * inverse(p) + d * inverse(q) - 0.5 * d;
    if (std::abs(gap) > 1e-12) c.violations.push_back("scaling identity 2/p + d/q = d/2 fails (gap " + show(gap) + ")");
  }
  c.admissible = c.violations.empty();
  return c;
}

AdmissiblePair validate_pair(double p, double q, int d) {
  const PairCheck c = check_pair(p, q, d);
  if (!c.admissible) {
    std::string msg = "strichartz pair (" + show(p) + ", " + show(q) + ", " + std::to_string(d) + ") rejected:";
    for (const auto& v : c.violations) msg += " " + v + ";";
    throw ValidationError(msg);
  }
  return AdmissiblePair{p, q, d};
}

double mixed_norm(const SpectralField& u0, const AdmissiblePair& pair, double sigma, double t_horizon) {
  if (!(t_horizon > 0.0)) throw ValidationError("strichartz.t_horizon must be > 0");
  const auto& grid = u0.grid();
  const double cell = grid.cell_volume();
  const double dt = t_horizon / kStrichartzTimeNodes;
  double acc = 0.0;
  for (int i = 0; i < kStrichartzTimeNodes; ++i) {
    const double lq = lq_norm(to_physical(free_propagate(u0, (i + 0.5) * dt, sigma, 0.0)), pair.q, cell);
    if (std::isinf(pair.p)) {
      acc = std::max(acc, lq);
    } else {
      acc += dt * std::pow(lq, pair.p);
    }
  }
  return std::isinf(pair.p) ? acc : std::pow(acc, 1.0 / pair.p);
}

double strichartz_ratio(const SpectralField& u0, const AdmissiblePair& pair, double sigma, double t_horizon) {
  const double den = sobolev_norm(u0, SobolevIndex{inverse(pair.p)});
  if (den == 0.0) throw ValidationError("strichartz: zero datum");
  return mixed_norm(u0, pair, sigma, t_horizon) / den;
}

SpectralField strichartz_datum(const TorusGrid& grid, const AdmissiblePair& pair, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  const double expo = -0.5 * inverse(pair.p) - 0.25;
  SpectralField u = SpectralField::zeros(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_nyquist(i)) continue;
    const double re = gauss(rng);
    const double im = gauss(rng);
    u[i] = cplx(re, im) * std::pow(1.0 + grid.k_squared(i), expo);
  }
  u *= 1.0 / sobolev_norm(u, SobolevIndex{inverse(pair.p)});
  return u;
}

StrichartzReport estimate_strichartz_constant(const AdmissiblePair& pair, double sigma, int n, int trials,
                                              std::uint64_t seed, double t_horizon) {
  validate_pair(pair.p, pair.q, pair.d);
  if (trials < 1) throw ValidationError("strichartz.trials must be >= 1");
  if (!(sigma >= 2.0)) throw ValidationError("equation.sigma must be >= 2");
  const TorusGrid grid(pair.d, n);
  StrichartzReport rep;
  rep.pair = pair;
  rep.sigma = sigma;
  rep.n = n;
  rep.trials = trials;
  rep.seed = seed;
  rep.t_horizon = t_horizon;
  rep.space_nodes = int(grid.size());
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    const SpectralField u = strichartz_datum(grid, pair, rng);
    const double r = strichartz_ratio(u, pair, sigma, t_horizon);
    rep.ratios.push_back(r);
    rep.empirical_constant = std::max(rep.empirical_constant, r);
  }
  return rep;
}

}  // namespace fraq
