#include <doctest.h>

#include <random>

#include "fraq/control_nonlinear.hpp"
#include "oracle.hpp"

using namespace fraq;

namespace {

const Nonlinearity kCubicQuintic({0.0, 1.0, 1.0});

SpectralField state(const TorusGrid& g, std::uint64_t seed, double h1_norm, int bandwidth = 4) {
  std::mt19937_64 rng(seed);
  SpectralField u = oracle::random_field(g, rng, bandwidth, 2.0);
  u *= h1_norm / sobolev_norm(u, {1.0});
  return u;
}

GramianSpec bump_spec(const TorusGrid& g, double p0) {
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  return GramianSpec{1.0, SobolevIndex{1.0}, 2.0, p0, CutoffProfile::from_values(g, a.values), 64, true};
}

EvolutionConfig stab_config(double dt) {
  EvolutionConfig cfg;
  cfg.sigma = 2.0;
  cfg.p0_shift = 1.0;
  cfg.dt = dt;
  return cfg;
}

double control_size(const ControlSignal& h, const TorusGrid& g) {
  double m = 0.0;
  for (const auto& s : h.samples) m = std::max(m, sobolev_norm(to_spectral(g, s), {1.0}));
  return m;
}

}  // namespace

TEST_CASE("local control with zero data stops at iteration zero") {
  const TorusGrid g(1, 32);
  const auto res = solve_local_control(SpectralField::zeros(g), SpectralField::zeros(g), bump_spec(g, 1.0), kCubicQuintic);
  CHECK(res.converged);
  CHECK(res.history.size() == 1);
  CHECK(res.history.front().iteration == 0);
  CHECK(res.control.seed.is_zero());
  CHECK(control_size(res.control.control, g) == 0.0);
}

TEST_CASE("linear equation reproduces the linear HUM control in one step") {
  const TorusGrid g(1, 32);
  const Nonlinearity lin({0.0, 2.0});
  const auto spec = bump_spec(g, 2.0);
  const SpectralField u0 = state(g, 1, 1e-2);
  LocalControlOptions opts;
  opts.cg_tol = 1e-12;
  const auto local = solve_local_control(u0, SpectralField::zeros(g), spec, lin, opts);
  const auto hum = solve_hum(u0, SpectralField::zeros(g), spec, 1e-12);
  CHECK(local.converged);
  CHECK(local.history.back().iteration == 1);
  CHECK(oracle::rel_l2(local.control.seed, hum.seed) <= 1e-8);
  CHECK((local.control.achieved_final - hum.achieved_final).norm_l2() <= 1e-8);
}

TEST_CASE("small data local control converges and contracts") {
  const TorusGrid g(1, 32);
  const SpectralField u0 = state(g, 2, 1e-2);
  const auto res = solve_local_control(u0, SpectralField::zeros(g), bump_spec(g, 1.0), kCubicQuintic);
  CHECK(res.converged);
  CHECK(res.history.back().iteration <= 20);
  CHECK(res.history.back().residual <= 1e-6);
  double prev = res.history.front().residual;
  for (const auto& h : res.history) {
    if (!h.accepted) continue;
    CHECK(h.residual <= prev);
    prev = h.residual;
  }
  for (double c : res.contraction_factors) CHECK(c < 1.0);
  CHECK(res.control.residual_hs <= 1e-5);
}

TEST_CASE("local control to a nonzero target") {
  const TorusGrid g(1, 32);
  const SpectralField u0 = state(g, 3, 1e-2);
  const SpectralField v = state(g, 4, 1e-2);
  const auto res = solve_local_control(u0, v, bump_spec(g, 1.0), kCubicQuintic);
  CHECK(res.converged);
  CHECK(res.control.residual_hs <= 1e-5);
}

TEST_CASE("local control rejects large data and a mismatched shift") {
  const TorusGrid g(1, 32);
  CHECK_THROWS_AS(solve_local_control(state(g, 5, 1.0), SpectralField::zeros(g), bump_spec(g, 1.0), kCubicQuintic),
                  ValidationError);
  CHECK_THROWS_AS(solve_local_control(state(g, 5, 1e-2), SpectralField::zeros(g), bump_spec(g, 0.0), kCubicQuintic),
                  ValidationError);
}

TEST_CASE("control magnitude shrinks with the data") {
  const TorusGrid g(1, 32);
  const SpectralField u0 = state(g, 6, 2e-2);
  const auto spec = bump_spec(g, 1.0);
  const auto big = solve_local_control(u0, SpectralField::zeros(g), spec, kCubicQuintic);
  const auto small = solve_local_control(0.1 * u0, SpectralField::zeros(g), spec, kCubicQuintic);
  const double ratio = control_size(big.control.control, g) / control_size(small.control.control, g);
  MESSAGE("control ratio " << ratio);
  CHECK(ratio >= 5.0);
}

TEST_CASE("stabilization of the zero state is immediate") {
  const TorusGrid g(1, 32);
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  const auto res = stabilize_to_ball(SpectralField::zeros(g), a, 1e-2, stab_config(1e-2), kCubicQuintic, 10.0);
  CHECK(res.t_reached == 0.0);
  CHECK(res.forcing.empty());
}

TEST_CASE("stabilization forcing lives on the damping region and re-simulates exactly") {
  const TorusGrid g(1, 32);
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  const SpectralField u0 = state(g, 7, 1.0);
  const auto cfg = stab_config(1e-2);
  const auto res = stabilize_to_ball(u0, a, 0.2, cfg, kCubicQuintic, 200.0);
  CHECK(res.achieved_norm <= 0.2);
  CHECK(res.t_reached > 0.0);
  CHECK(res.forcing.samples.size() == std::size_t(std::lround(res.t_reached / cfg.dt)));
  for (const auto& s : res.forcing.samples)
    for (std::size_t j = 0; j < g.size(); ++j)
      if (a.values[j] == 0.0) CHECK(s[j] == cplx(0.0));

  EvolutionConfig sim = cfg;
  sim.t_final = res.t_reached;
  sim.t_out = res.t_reached;
  sim.keep_states = false;
  const SpectralField again = integrate_undamped(u0, sim, kCubicQuintic, &res.forcing).final_state();
  CHECK((again - res.small_state).norm_l2() <= 1e-8);

  const SpectralField damped = integrate_damped(u0, a, sim, kCubicQuintic).final_state();
  CHECK(oracle::rel_l2(res.small_state, damped) <= 1e-3);
}

TEST_CASE("verification of a free orbit") {
  const TorusGrid g(1, 32);
  const SpectralField v = state(g, 8, 1.0);
  EvolutionConfig cfg = stab_config(1e-3);
  cfg.t_final = 1.0;
  cfg.keep_states = false;
  const SpectralField u0 = conjugate(integrate_undamped(conjugate(v), cfg, kCubicQuintic).final_state());
  const ControlSegment seg{"free", 1e-3, 1.0, {}};
  const auto rep = verify_control(u0, std::span(&seg, 1), v, cfg, kCubicQuintic);
  CHECK(rep.residual_l2 <= 1e-8);
  CHECK(rep.support_violation == 0.0);
}

TEST_CASE("verification of a linear HUM control") {
  const TorusGrid g(1, 32);
  const Nonlinearity lin({0.0, 1.0});
  const auto spec = bump_spec(g, 1.0);
  const SpectralField u0 = state(g, 9, 1.0);
  const auto hum = solve_hum(u0, SpectralField::zeros(g), spec, 1e-12);
  const ControlSegment seg{"hum", spec.quad_step() / 5, 1.0, hum.control};
  std::vector<bool> allowed(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) allowed[j] = spec.phi.values[j] != 0.0;
  const auto rep = verify_control(u0, std::span(&seg, 1), SpectralField::zeros(g), stab_config(1e-3), lin, &allowed);
  CHECK(rep.residual_l2 <= 1e-8);
  CHECK(rep.support_violation == 0.0);
}

TEST_CASE("global control of zero data is empty") {
  const TorusGrid g(1, 32);
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  const auto plan = solve_global_control(SpectralField::zeros(g), SpectralField::zeros(g), a, bump_spec(g, 1.0),
                                         kCubicQuintic);
  CHECK(plan.segments.empty());
  CHECK(plan.total_time == 0.0);
  CHECK_FALSE(plan.phase_c.has_value());
}

TEST_CASE("global control steers between unit states") {
  const TorusGrid g(1, 32);
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  const SpectralField u0 = state(g, 10, 1.0);
  const SpectralField v0 = state(g, 11, 1.0);
  GlobalControlOptions opts;
  opts.local.fp_tol = 1e-10;
  opts.local.max_iter = 40;
  const auto plan = solve_global_control(u0, v0, a, bump_spec(g, 1.0), kCubicQuintic, opts);
  CHECK(plan.verification.residual_l2 <= 1e-3);
  CHECK(plan.reversal_residual <= 1e-8);
  CHECK(plan.verification.support_violation == 0.0);
  REQUIRE(plan.gcc.has_value());
  CHECK(plan.gcc->satisfied);
  REQUIRE(plan.segments.size() == 3);
  CHECK(plan.segments[0].phase == "A");
  CHECK(plan.segments[1].phase == "C");
  CHECK(plan.segments[2].phase == "B");
  CHECK(plan.phase_a.achieved_norm <= opts.eps_small);
  CHECK(plan.phase_b.achieved_norm <= opts.eps_small);
  for (const auto& seg : plan.segments)
    for (const auto& s : seg.signal.samples)
      for (std::size_t j = 0; j < g.size(); ++j)
        if (!plan.allowed[j]) CHECK(s[j] == cplx(0.0));
}

TEST_CASE("stabilization reports the time cap") {
  const TorusGrid g(1, 32);
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  CHECK_THROWS_AS(stabilize_to_ball(state(g, 12, 1.0), a, 1e-3, stab_config(1e-2), kCubicQuintic, 0.5),
                  NumericalError);
}
