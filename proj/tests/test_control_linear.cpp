#include <doctest.h>

#include <random>

#include "fraq/control_linear.hpp"
#include "oracle.hpp"

using namespace fraq;

namespace {

GramianSpec flat_spec(const TorusGrid& g, double T, double s = 1.0, int n_quad = 64) {
  return GramianSpec{T, SobolevIndex{s}, 2.0, 0.0, CutoffProfile::constant(g, 1.0), n_quad, true};
}

GramianSpec bump_spec(const TorusGrid& g, double T = 1.0, int n_quad = 64) {
  const auto a = build_damping_profile(g, Region::parse("interval:0,pi"));
  return GramianSpec{T, SobolevIndex{1.0}, 2.0, 0.0, CutoffProfile::from_values(g, a.values), n_quad, true};
}

SpectralField small_state(const TorusGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SpectralField u = oracle::random_field(g, rng, 6, 2.0);
  u *= 1.0 / sobolev_norm(u, {1.0});
  return u;
}

}  // namespace

TEST_CASE("control operator examples") {
  const TorusGrid g(1, 32);
  const SpectralField e1 = SpectralField::mode(g, 1, 0, 1.0);
  const SpectralField out = apply_control_operator(e1, CutoffProfile::constant(g, 1.0), {1.0});
  CHECK(std::abs(out.at(1) - 0.5) < 1e-15);
  CHECK(out.norm_l2() == doctest::Approx(0.5));
  CHECK(apply_control_operator(e1, CutoffProfile::constant(g, 0.0), {1.0}).is_zero());
}

TEST_CASE("control operator is symmetric") {
  std::mt19937_64 rng(71);
  const TorusGrid g(1, 32);
  const auto spec = bump_spec(g);
  for (int trial = 0; trial < 20; ++trial) {
    const SpectralField u = oracle::random_field(g, rng);
    const SpectralField v = oracle::random_field(g, rng);
    const cplx a = inner(apply_control_operator(u, spec.phi, spec.s), v);
    const cplx b = inner(u, apply_control_operator(v, spec.phi, spec.s));
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("gramian with flat cutoff is T times the bessel potential") {
  std::mt19937_64 rng(73);
  for (int d : {1, 2}) {
    const TorusGrid g(d, 16);
    for (double T : {0.5, 1.0, 2.0}) {
      const auto spec = flat_spec(g, T, 1.5, 8);
      const SpectralField v = oracle::random_field(g, rng);
      const SpectralField got = apply_gramian(v, spec);
      SpectralField expect = v;
      for (std::size_t i = 0; i < g.size(); ++i) expect[i] *= T * std::pow(1.0 + g.k_squared(i), -1.5);
      CHECK(oracle::max_diff(got, expect) <= 1e-12 * v.norm_l2());
    }
  }
}

TEST_CASE("gramian vanishes linearly as the horizon shrinks") {
  std::mt19937_64 rng(79);
  const TorusGrid g(1, 32);
  const SpectralField v = oracle::random_field(g, rng);
  const double a = apply_gramian(v, bump_spec(g, 1e-4, 16)).norm_l2();
  const double b = apply_gramian(v, bump_spec(g, 2e-4, 16)).norm_l2();
  const double c = apply_gramian(v, bump_spec(g, 1e-6, 16)).norm_l2();
  CHECK(b / a == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(c < 1e-5 * v.norm_l2());
}

TEST_CASE("gramian is hermitian and nonnegative") {
  std::mt19937_64 rng(83);
  for (int d : {1, 2}) {
    const TorusGrid g(d, d == 1 ? 32 : 16);
    const auto spec = d == 1 ? bump_spec(g)
                             : GramianSpec{1.0, {1.0}, 2.0, 0.5,
                                           CutoffProfile::from_values(
                                               g, build_damping_profile(g, Region::parse("ball:pi,pi,1.5")).values),
                                           16, true};
    for (int trial = 0; trial < 20; ++trial) {
      const SpectralField x = oracle::random_field(g, rng);
      const SpectralField y = oracle::random_field(g, rng);
      const cplx xy = inner(apply_gramian(x, spec), y);
      const cplx yx = inner(x, apply_gramian(y, spec));
      CHECK(std::abs(xy - yx) <= 1e-12 * std::max(1.0, std::abs(xy)));
      const cplx xx = inner(apply_gramian(x, spec), x);
      CHECK(xx.real() >= -1e-12);
      CHECK(std::abs(xx.imag()) <= 1e-12 * std::max(1.0, std::abs(xx)));
    }
  }
}

TEST_CASE("gramian spec validation") {
  const TorusGrid g(1, 16);
  auto spec = flat_spec(g, 1.0);
  CHECK_NOTHROW(spec.validate());
  spec.t_horizon = 0.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = flat_spec(g, 1.0);
  spec.n_quad = 1;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("zero data need no control") {
  const TorusGrid g(1, 32);
  const auto res = solve_hum(SpectralField::zeros(g), SpectralField::zeros(g), bump_spec(g), 1e-10);
  CHECK(res.cg_iterations == 0);
  CHECK(res.seed.is_zero());
  for (const auto& s : res.control.samples)
    for (const auto& z : s) CHECK(z == cplx(0.0));
  CHECK(res.residual_l2 == 0.0);
}

TEST_CASE("flat cutoff seed in closed form") {
  const TorusGrid g(1, 32);
  const double T = 1.3;
  const auto spec = flat_spec(g, T, 1.0, 16);
  const SpectralField u0 = small_state(g, 3);
  const SpectralField target = small_state(g, 4);
  const auto res = solve_hum(u0, target, spec, 1e-12);
  for (int k = -15; k <= 15; ++k) {
    const cplx reduced = u0.at(k) - std::polar(1.0, -T * k * k) * target.at(k);
    const cplx z = cplx(0.0, -1.0) * reduced / (T / (1.0 + k * k));
    CHECK(std::abs(res.seed.at(k) - z) <= 1e-10);
  }
  CHECK(res.relative_residual <= 1e-10);
}

TEST_CASE("bump cutoff drives the state to rest") {
  const TorusGrid g(1, 32);
  const auto spec = bump_spec(g);
  const auto res = solve_hum(small_state(g, 5), SpectralField::zeros(g), spec, 1e-10);
  CHECK(res.relative_residual <= 1e-8);
  CHECK(res.control.samples.size() == 64);
  CHECK(res.control.interval == doctest::Approx(1.0 / 64));
  REQUIRE(res.continuous_residual.has_value());
  CHECK(std::isfinite(*res.continuous_residual));
}

TEST_CASE("discrete duality identity") {
  std::mt19937_64 rng(89);
  const TorusGrid g(1, 32);
  const auto spec = bump_spec(g);
  const SpectralField u0 = small_state(g, 6);
  const auto res = solve_hum(u0, SpectralField::zeros(g), spec, 1e-10);
  for (int trial = 0; trial < 5; ++trial) {
    const SpectralField v0 = oracle::random_field(g, rng, 10, 1.0);
    const cplx lhs = inner(cplx(0.0, -1.0) * u0, v0);
    // sum_m dtau int h_m conj(v(tau_m)) by nodal quadrature
    cplx rhs = 0.0;
    const double dtau = spec.quad_step();
    for (int m = 0; m < spec.n_quad; ++m) {
      const auto v = to_physical(free_propagate(v0, spec.node(m), 2.0, 0.0));
      const auto& h = res.control.samples[m];
      cplx acc = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) acc += h[j] * std::conj(v[j]);
      rhs += dtau * g.cell_volume() * acc;
    }
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    CHECK(std::abs(control_pairing(res.control, v0, spec) - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("steering map is linear") {
  const TorusGrid g(1, 32);
  const auto spec = bump_spec(g);
  const SpectralField u0 = small_state(g, 7);
  const double cg_tol = 1e-10;
  const auto base = solve_hum(u0, SpectralField::zeros(g), spec, cg_tol);
  for (cplx alpha : {cplx(2.0, 0.0), cplx(-0.5, 0.25), cplx(0.0, 3.0)}) {
    const auto scaled = solve_hum(alpha * u0, SpectralField::zeros(g), spec, cg_tol);
    CHECK(oracle::rel_l2(scaled.seed, alpha * base.seed) <= 1e-8);
  }
}

TEST_CASE("control vanishes outside the cutoff support") {
  const TorusGrid g(1, 32);
  const auto spec = bump_spec(g);
  const auto res = solve_hum(small_state(g, 8), small_state(g, 9), spec, 1e-10);
  std::size_t outside = 0;
  for (const auto& s : res.control.samples) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (spec.phi.values[j] == 0.0) {
        CHECK(s[j] == cplx(0.0));
        ++outside;
      }
    }
  }
  CHECK(outside > 0);
}

TEST_CASE("observability constant with flat cutoff equals the horizon") {
  for (double T : {0.5, 1.0, 2.5}) {
    const auto est = estimate_observability_constant(flat_spec(TorusGrid(1, 32), T, 1.0, 16));
    CHECK(std::abs(est.lambda_min - T) <= 1e-10);
    CHECK(est.method == "dense");
  }
}

TEST_CASE("observability constant grows with the horizon") {
  const TorusGrid g(1, 32);
  double prev = 0.0;
  for (int m = 1; m <= 4; ++m) {
    const auto est = estimate_observability_constant(bump_spec(g, 0.5 * m, 32 * m));
    CHECK(est.lambda_min >= prev - 1e-12);
    prev = est.lambda_min;
  }
  CHECK(prev > 0.0);
}

TEST_CASE("lanczos agrees with the dense eigensolver") {
  const TorusGrid g(1, 32);
  const auto spec = bump_spec(g);
  const auto dense = estimate_observability_constant(spec);
  const auto lanczos = estimate_observability_constant(spec, 0);
  CHECK(dense.method == "dense");
  CHECK(lanczos.method == "lanczos");
  CHECK(dense.lambda_min > 0.0);
  CHECK(lanczos.lambda_min == doctest::Approx(dense.lambda_min).epsilon(1e-6));
}
