#include "fraq/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fraq {

namespace {

constexpr double kPositivityFloor = 1e-6;
constexpr int kDefocusingSamples = 10000;

}  // namespace

Nonlinearity::Nonlinearity(std::vector<double> coeffs, double gauge_shift)
    : coeffs_(std::move(coeffs)), gauge_(gauge_shift) {
  if (coeffs_.empty()) throw ValidationError("equation.P: empty coefficient list");
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw ValidationError("equation.P: coefficients must be finite");
  }
  if (!std::isfinite(gauge_) || gauge_ < 0.0) {
    throw ValidationError("equation.gauge_shift must be finite and >= 0");
  }
}

int Nonlinearity::degree() const noexcept {
  for (int j = int(coeffs_.size()) - 1; j > 0; --j) {
    if (coeffs_[j] != 0.0) return j;
  }
  return 0;
}

double Nonlinearity::value(double r) const noexcept {
  double acc = 0.0;
  for (int j = int(coeffs_.size()) - 1; j >= 0; --j) acc = acc * r + coeffs_[j];
  return acc + gauge_ * r;
}

double Nonlinearity::derivative(double r) const noexcept {
  double acc = 0.0;
  for (int j = int(coeffs_.size()) - 1; j >= 1; --j) acc = acc * r + j * coeffs_[j];
  return acc + gauge_;
}

double Nonlinearity::second_derivative(double r) const noexcept {
  double acc = 0.0;
  for (int j = int(coeffs_.size()) - 1; j >= 2; --j) acc = acc * r + double(j) * (j - 1) * coeffs_[j];
  return acc;
}

DefocusingVerdict validate_defocusing(const Nonlinearity& p, double r_check, bool allow_linear) {
  if (!(r_check > 0.0) || !std::isfinite(r_check)) {
    throw ValidationError("validate_defocusing: r_check must be positive");
  }
  DefocusingVerdict v;
  auto coeffs = p.coeffs();
  const int deg = p.degree();

  if (coeffs[0] != 0.0) {
    v.zero_constant = false;
    v.violations.push_back("P(0) != 0 (constant term must vanish)");
  }

  const double lead = deg > 0 ? coeffs[deg] : 0.0;
  if (deg >= 2) {
    v.grows = lead > 0.0;
  } else {
    v.grows = allow_linear && deg == 1;
  }
  if (!v.grows) {
    std::ostringstream os;
    if (deg >= 2) {
      os << "P'(r) -> -inf (negative leading coefficient): nonlinearity is not defocusing";
    } else {
      os << "degree of P is " << deg << "; P'(r) -> inf requires degree >= 2";
    }
    v.violations.push_back(os.str());
  }

  // Minimum of P' on [0, r_check]: samples + exact critical points of P'.
  double best = p.derivative(0.0);
  double arg = 0.0;
  auto consider = [&](double r) {
    if (r < 0.0 || r > r_check) return;
    const double d = p.derivative(r);
    if (d < best) {
      best = d;
      arg = r;
    }
  };
  for (int i = 1; i <= kDefocusingSamples; ++i) consider(r_check * i / kDefocusingSamples);
  if (deg <= 4) {
    // roots of P''(r) = c0 + c1 r + c2 r^2
    double c[3] = {0.0, 0.0, 0.0};
    for (int j = 2; j <= std::min(deg, 4); ++j) c[j - 2] = double(j) * (j - 1) * coeffs[j];
    if (c[2] != 0.0) {
      const double disc = c[1] * c[1] - 4.0 * c[2] * c[0];
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        consider((-c[1] + sq) / (2.0 * c[2]));
        consider((-c[1] - sq) / (2.0 * c[2]));
      }
    } else if (c[1] != 0.0) {
      consider(-c[0] / c[1]);
    }
  }
  v.min_derivative = best;
  v.argmin = arg;
  if (best < kPositivityFloor) {
    v.positive_derivative = false;
    std::ostringstream os;
    os << "P'(r) >= C > 0 fails: min P' = " << best << " at r = " << arg;
    v.violations.push_back(os.str());
  }
  if (v.zero_constant && v.grows && !v.positive_derivative) {
    v.suggested_shift = kPositivityFloor - best;
  }
  return v;
}

namespace {

template <class F>
SpectralField pointwise(const SpectralField& u, F&& factor, bool dealias) {
  SpectralField in = u;
  if (dealias) dealias_in_place(in);
  NodalValues vals = to_physical(in);
  for (auto& z : vals) z *= factor(std::norm(z));
  SpectralField out = to_spectral(u.grid(), vals);
  if (dealias) dealias_in_place(out);
  return out;
}

}  // namespace

SpectralField eval_nonlinear_term(const SpectralField& u, const Nonlinearity& p, bool dealias) {
  return pointwise(u, [&](double r) { return p.derivative(r); }, dealias);
}

SpectralField eval_nonlinear_remainder(const SpectralField& u, const Nonlinearity& p, double shift,
                                       bool dealias) {
  return pointwise(u, [&](double r) { return p.derivative(r) - shift; }, dealias);
}

}  // namespace fraq
