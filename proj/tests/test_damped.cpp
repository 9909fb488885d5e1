#include <doctest.h>

#include <random>

#include "fraq/dynamics.hpp"
#include "oracle.hpp"

using namespace fraq;

namespace {

SpectralField smooth_state(const TorusGrid& g, std::uint64_t seed, double h1_norm) {
  std::mt19937_64 rng(seed);
  SpectralField u = oracle::random_field(g, rng, 4, 2.0);
  u *= h1_norm / sobolev_norm(u, {1.0});
  return u;
}

EvolutionConfig evolution(double dt, double t_final, double t_out = 0.0) {
  EvolutionConfig cfg;
  cfg.sigma = 2.0;
  cfg.p0_shift = 1.0;
  cfg.dt = dt;
  cfg.t_final = t_final;
  cfg.t_out = t_out;
  cfg.keep_states = true;
  return cfg;
}

double identity_residual(const Trajectory& tr) {
  double r = 0.0;
  const double e0 = tr.reports.front().energy;
  for (const auto& rep : tr.reports) r = std::max(r, std::abs(rep.energy - e0 + rep.dissipation_integral));
  return r;
}

}  // namespace

TEST_CASE("zero profile gives the identity resolvent") {
  const TorusGrid g(1, 32);
  std::mt19937_64 rng(1);
  const SpectralField rhs = oracle::random_field(g, rng);
  const DampingOperator m(DampingProfile::constant(g, 0.0), 2.0);
  CHECK(m.is_zero());
  CHECK(oracle::max_diff(solve_damping_resolvent(rhs, m, 1, 1e-12), rhs) == 0.0);
}

TEST_CASE("constant profile resolvent in closed form") {
  std::mt19937_64 rng(2);
  for (int d : {1, 2}) {
    const TorusGrid g(d, 16);
    for (double sigma : {2.0, 3.0}) {
      const DampingOperator m(DampingProfile::constant(g, 1.0), sigma);
      const SpectralField rhs = oracle::random_field(g, rng);
      for (int sign : {1, -1}) {
        const SpectralField w = solve_damping_resolvent(rhs, m, sign, 1e-13);
        SpectralField expect = rhs;
        for (std::size_t i = 0; i < g.size(); ++i) {
          expect[i] /= cplx(1.0, -sign * std::pow(1.0 + g.k_squared(i), -0.5 * sigma));
        }
        CHECK(oracle::max_diff(w, expect) <= 1e-10);
      }
    }
  }
}

TEST_CASE("resolvent residual meets the tolerance") {
  std::mt19937_64 rng(3);
  const TorusGrid g(1, 64);
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  const DampingOperator m(a, 2.0);
  for (double tol : {1e-6, 1e-9, 1e-12}) {
    const SpectralField rhs = oracle::random_field(g, rng);
    ResolventStats stats;
    const SpectralField w = solve_damping_resolvent(rhs, m, 1, tol, &stats);
    SpectralField r = w;
    r.axpy(cplx(0.0, -1.0), m.apply(w));
    r -= rhs;
    CHECK(r.norm_l2() <= tol * rhs.norm_l2());
    CHECK(stats.relative_residual <= tol);
  }
}

TEST_CASE("damping operator is symmetric, nonnegative and supported on the region") {
  std::mt19937_64 rng(4);
  const TorusGrid g(1, 64);
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  const DampingOperator m(a, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const SpectralField u = oracle::random_field(g, rng);
    const SpectralField v = oracle::random_field(g, rng);
    const cplx uv = inner(m.apply(u), v), vu = inner(u, m.apply(v));
    CHECK(std::abs(uv - vu) <= 1e-12 * std::max(1.0, std::abs(uv)));
    CHECK(inner(m.apply(u), u).real() >= -1e-14);
    const auto nodal = m.apply_nodal(u);
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (a.values[j] == 0.0) CHECK(nodal[j] == cplx(0.0));
    }
  }
}

TEST_CASE("dissipation rate by direct quadrature") {
  std::mt19937_64 rng(5);
  const TorusGrid g(1, 32);
  const auto a = build_damping_profile(g, Region::parse("interval:pi/2,3pi/2"));
  const DampingOperator m(a, 2.0);
  const SpectralField w = oracle::random_field(g, rng, 6);
  const auto wv = oracle::nodal(w);
  std::vector<cplx> aw(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) aw[j] = a.values[j] * wv[j];
  double expect = 0.0;
  for (const auto& k : oracle::retained_modes(1, 32)) {
    expect += 2.0 * std::norm(oracle::coefficient(1, 32, aw, k)) / (1.0 + k.k1 * k.k1);
  }
  CHECK(m.dissipation_rate(w) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("zero profile matches the undamped integrator") {
  const TorusGrid g(1, 32);
  const Nonlinearity p({0.0, 1.0, 1.0});
  const SpectralField u0 = smooth_state(g, 6, 1.0);
  const auto cfg = evolution(1e-3, 0.5, 0.1);
  const auto damped = integrate_damped(u0, DampingProfile::constant(g, 0.0), cfg, p);
  const auto plain = integrate_undamped(u0, cfg, p);
  REQUIRE(damped.states.size() == plain.states.size());
  for (std::size_t i = 0; i < plain.states.size(); ++i) {
    CHECK(oracle::max_diff(damped.states[i], plain.states[i]) <= 1e-10);
  }
}

TEST_CASE("damped energy is nonincreasing and the dissipation integral grows") {
  const TorusGrid g(1, 32);
  const Nonlinearity p({0.0, 1.0, 1.0});
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  const auto tr = integrate_damped(smooth_state(g, 7, 1.0), a, evolution(5e-3, 10.0), p);
  const double e0 = tr.reports.front().energy;
  for (std::size_t i = 1; i < tr.reports.size(); ++i) {
    CHECK(tr.reports[i].energy <= tr.reports[i - 1].energy + 1e-9 * e0);
    CHECK(tr.reports[i].dissipation_integral >= tr.reports[i - 1].dissipation_integral);
  }
  CHECK(tr.reports.back().energy < e0);
}

TEST_CASE("energy identity residual is second order") {
  const TorusGrid g(1, 32);
  const Nonlinearity p({0.0, 1.0, 1.0});
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  const SpectralField u0 = smooth_state(g, 8, 1.0);
  const double r1 = identity_residual(integrate_damped(u0, a, evolution(2e-2, 2.0, 0.1), p));
  const double r2 = identity_residual(integrate_damped(u0, a, evolution(1e-2, 2.0, 0.1), p));
  MESSAGE("identity residual ratio " << r1 / r2);
  CHECK(r1 / r2 >= 3.5);
  CHECK(r1 / r2 <= 4.5);
}

TEST_CASE("anti-damping sign raises the energy") {
  const TorusGrid g(1, 32);
  const Nonlinearity p({0.0, 1.0, 1.0});
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  auto cfg = evolution(5e-3, 1.0);
  cfg.damping_sign = -1;
  const auto tr = integrate_damped(smooth_state(g, 7, 1.0), a, cfg, p);
  CHECK(tr.reports.back().energy > tr.reports.front().energy);
}

TEST_CASE("damped run decays at a positive rate") {
  const TorusGrid g(1, 32);
  const Nonlinearity p({0.0, 1.0, 1.0});
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  const auto tr = integrate_damped(smooth_state(g, 10, 1.0), a, evolution(1e-2, 20.0, 0.1), p);
  const auto fit = fit_decay_rate(tr.reports, 10.0, 20.0);
  CHECK(fit.gamma > 0.0);
  CHECK(fit.r_squared >= 0.9);
}

TEST_CASE("time derivative satisfies the damped equation") {
  const TorusGrid g(1, 32);
  const Nonlinearity p({0.0, 1.0, 1.0});
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  const auto cfg = evolution(1e-3, 1.0);
  const DampedField field(a, cfg, p);
  const SpectralField u = smooth_state(g, 11, 1.0);
  const SpectralField ut = field.time_derivative(u);
  // i u_t + Lambda^2 u + P'(|u|^2) u + a K a u_t = 0
  SpectralField lhs = cplx(0.0, 1.0) * ut;
  lhs += apply(Multiplier::fractional_laplacian(g, 2.0), u);
  lhs += eval_nonlinear_term(u, p);
  lhs += field.damping().apply(ut);
  CHECK(lhs.norm_l2() <= 1e-10 * ut.norm_l2());
}
