#include <doctest.h>

#include "fraq/strichartz.hpp"
#include "oracle.hpp"

using namespace fraq;

TEST_CASE("admissible pairs") {
  CHECK(check_pair(8, 4, 1).admissible);
  CHECK(check_pair(4, 4, 2).admissible);
  CHECK(check_pair(4, kInfinity, 1).admissible);
  CHECK(check_pair(kInfinity, 2, 2).admissible);
  CHECK(check_pair(kInfinity, 2, 1).admissible);
  CHECK_FALSE(check_pair(3, 3, 1).admissible);
  CHECK_FALSE(check_pair(1.5, kInfinity, 1).admissible);
  CHECK_FALSE(check_pair(8, 4, 3).admissible);
  CHECK_FALSE(check_pair(8, 1, 1).admissible);
}

TEST_CASE("endpoint pair in two dimensions is excluded") {
  const auto c = check_pair(2, kInfinity, 2);
  CHECK_FALSE(c.admissible);
  REQUIRE(c.violations.size() == 1);
  CHECK(c.violations[0].find("excluded") != std::string::npos);
  CHECK_THROWS_AS(validate_pair(2, kInfinity, 2), ValidationError);
  try {
    validate_pair(3, 3, 1);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("scaling") != std::string::npos);
  }
}

TEST_CASE("single mode ratio in closed form") {
  for (int d : {1, 2}) {
    const TorusGrid g(d, 16);
    for (auto [p, q] : d == 1 ? std::vector<std::pair<double, double>>{{8, 4}, {4, kInfinity}, {kInfinity, 2}}
                              : std::vector<std::pair<double, double>>{{4, 4}, {8, 8.0 / 3.0}, {kInfinity, 2}}) {
      const AdmissiblePair pair{p, q, d};
      for (double T : {0.5, 1.0, 2.0}) {
        const cplx c(0.6, -0.8);
        const int k1 = 3, k2 = d == 2 ? -2 : 0;
        const SpectralField u = SpectralField::mode(g, k1, k2, c);
        const double height = std::abs(c) * std::pow(kTwoPi, -0.5 * d);
        const double lq = std::isinf(q) ? height : height * std::pow(std::pow(kTwoPi, d), 1.0 / q);
        const double num = std::isinf(p) ? lq : lq * std::pow(T, 1.0 / p);
        const double ksq = double(k1 * k1 + k2 * k2);
        const double den = std::abs(c) * (std::isinf(p) ? 1.0 : std::pow(1.0 + ksq, 0.5 / p));
        CHECK(strichartz_ratio(u, pair, 2.0, T) == doctest::Approx(num / den).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("mixed norm against a direct space-time sum") {
  const TorusGrid g(1, 16);
  std::mt19937_64 rng(101);
  SpectralField u = oracle::random_field(g, rng, 4);
  const AdmissiblePair pair{8, 4, 1};
  const double T = 0.7;
  double acc = 0.0;
  for (int i = 0; i < kStrichartzTimeNodes; ++i) {
    const double t = (i + 0.5) * T / kStrichartzTimeNodes;
    double lq = 0.0;
    for (int j = 0; j < 16; ++j) {
      const double x = oracle::node(16, j);
      cplx v = 0.0;
      for (int k = -4; k <= 4; ++k) v += u.at(k) * std::polar(1.0, t * k * k) * oracle::basis(1, {k, 0}, x, 0.0);
      lq += std::pow(std::abs(v), 4.0);
    }
    acc += T / kStrichartzTimeNodes * std::pow(kTwoPi / 16 * lq, 2.0);
  }
  CHECK(mixed_norm(u, pair, 2.0, T) == doctest::Approx(std::pow(acc, 1.0 / 8.0)).epsilon(1e-12));
}

TEST_CASE("reports are reproducible for a fixed seed") {
  const AdmissiblePair pair{8, 4, 1};
  const auto a = estimate_strichartz_constant(pair, 2.0, 32, 1, 1234);
  const auto b = estimate_strichartz_constant(pair, 2.0, 32, 1, 1234);
  CHECK(a.empirical_constant == b.empirical_constant);
  CHECK(a.ratios == b.ratios);
  const auto c = estimate_strichartz_constant(pair, 2.0, 32, 1, 1235);
  CHECK(c.empirical_constant != a.empirical_constant);
}

TEST_CASE("ratio is scale invariant") {
  const AdmissiblePair pair{8, 4, 1};
  const TorusGrid g(1, 32);
  std::mt19937_64 rng(5);
  const SpectralField u = strichartz_datum(g, pair, rng);
  const double base = strichartz_ratio(u, pair, 2.0, 1.0);
  const double nbase = mixed_norm(u, pair, 2.0, 1.0);
  for (double alpha : {1e-3, 0.5, 7.0, 1e4}) {
    CHECK(std::abs(strichartz_ratio(alpha * u, pair, 2.0, 1.0) - base) <= 1e-12 * base);
    CHECK(mixed_norm(alpha * u, pair, 2.0, 1.0) == doctest::Approx(alpha * nbase).epsilon(1e-12));
  }
}

TEST_CASE("constant is monotone in the number of trials") {
  const AdmissiblePair pair{8, 4, 1};
  double prev = 0.0;
  std::vector<double> prefix;
  for (int trials : {1, 2, 4, 8}) {
    const auto rep = estimate_strichartz_constant(pair, 2.0, 32, trials, 77);
    CHECK(rep.empirical_constant >= prev);
    CHECK(std::equal(prefix.begin(), prefix.end(), rep.ratios.begin()));
    prev = rep.empirical_constant;
    prefix = rep.ratios;
  }
}

TEST_CASE("constant is stable under grid doubling") {
  const AdmissiblePair pair{8, 4, 1};
  const double c32 = estimate_strichartz_constant(pair, 2.0, 32, 8, 9).empirical_constant;
  const double c64 = estimate_strichartz_constant(pair, 2.0, 64, 8, 9).empirical_constant;
  const double c128 = estimate_strichartz_constant(pair, 2.0, 128, 8, 9).empirical_constant;
  CHECK(c64 < 2.0 * c32);
  CHECK(c128 < 2.0 * c64);
  CHECK(std::isfinite(c128));
  CHECK(c128 > 0.0);
}

TEST_CASE("estimator validates its inputs") {
  CHECK_THROWS_AS(estimate_strichartz_constant({2, kInfinity, 2}, 2.0, 16, 1, 1), ValidationError);
  CHECK_THROWS_AS(estimate_strichartz_constant({8, 4, 1}, 2.0, 16, 0, 1), ValidationError);
  CHECK_THROWS_AS(estimate_strichartz_constant({8, 4, 1}, 1.0, 16, 1, 1), ValidationError);
  CHECK_THROWS_AS(strichartz_ratio(SpectralField::zeros(TorusGrid(1, 16)), {8, 4, 1}, 2.0, 1.0), ValidationError);
}
