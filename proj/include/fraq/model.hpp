#pragma once

// Problem data: the polynomial nonlinearity, the control region and its
// smooth damping/cutoff profiles, and a geodesic sampler for the geometric
// control condition on flat tori.

#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fraq/spectral.hpp"

namespace fraq {

// ------------------------------------------------------------- nonlinearity

/// Real polynomial P(r) = sum_j coeffs[j] r^j together with a gauge shift c
/// that acts as P'(r) -> P'(r) + c (equivalently P(r) -> P(r) + c r).
class Nonlinearity {
 public:
  explicit Nonlinearity(std::vector<double> coeffs, double gauge_shift = 0.0);

  std::span<const double> coeffs() const noexcept { return coeffs_; }
  double gauge_shift() const noexcept { return gauge_; }
  /// Degree of P with trailing zero coefficients ignored (the gauge term
  /// does not count).
  int degree() const noexcept;

  /// Gauged potential P(r) + c r.
  double value(double r) const noexcept;
  /// Gauged derivative P'(r) + c.
  double derivative(double r) const noexcept;
  double second_derivative(double r) const noexcept;
  double derivative_at_zero() const noexcept { return derivative(0.0); }
  /// True when P' is constant, i.e. the equation is linear.
  bool is_linear() const noexcept { return degree() <= 1; }

  Nonlinearity with_gauge(double c) const { return Nonlinearity(coeffs_, c); }

 private:
  std::vector<double> coeffs_;
  double gauge_;
};

struct DefocusingVerdict {
  bool zero_constant = true;     // P(0) = 0
  bool grows = true;             // P'(r) -> +inf (degree >= 2, positive leading coefficient)
  bool positive_derivative = true;  // min P' >= C > 0 on [0, r_check]
  double min_derivative = 0.0;
  double argmin = 0.0;
  /// Smallest additional gauge making min P' >= 1e-6 when only the
  /// positivity condition fails; 0 otherwise.
  double suggested_shift = 0.0;
  std::vector<std::string> violations;

  bool valid() const noexcept { return violations.empty(); }
};

/// Checks P(0) = 0, P' -> inf and P' >= C > 0 on [0, r_check].  The minimum
/// of P' is found by sampling (10^4 points) and, for degree <= 4, by
/// evaluating the exact critical points of P'.  With `allow_linear`, a
/// degree-1 P passes the growth check (well-posedness-only runs).
DefocusingVerdict validate_defocusing(const Nonlinearity& p, double r_check, bool allow_linear = false);

/// N(u) = P'(|u|^2) u evaluated pointwise at the nodes. With `dealias` the
/// 2/3 rule is applied to the input and to the output.
SpectralField eval_nonlinear_term(const SpectralField& u, const Nonlinearity& p, bool dealias = false);

/// (P'(|u|^2) - shift) u, the part of the nonlinearity not folded into the
/// linear generator.
SpectralField eval_nonlinear_remainder(const SpectralField& u, const Nonlinearity& p, double shift,
                                       bool dealias = false);

// ------------------------------------------------------------------ regions

struct Interval {
  double a, b;  // (a, b); wraps through 0 when a > b
};
struct Box {
  double a1, b1, a2, b2;
};
struct Ball {
  double cx, cy, r;
};

/// Open subset of T^1 or T^2 built from intervals, boxes and balls, with an
/// optional complement.  Syntax: "interval:a,b", "box:a1,b1,a2,b2",
/// "ball:cx,cy,r", "complement:<region>", "full".
class Region {
 public:
  struct Full {};
  struct Complement {
    std::shared_ptr<const Region> inner;
  };
  using Shape = std::variant<Full, Interval, Box, Ball, Complement>;

  explicit Region(Shape shape);
  static Region parse(const std::string& text);
  static Region complement_of(Region r);

  int dim() const noexcept;
  bool contains(double x, double y = 0.0) const noexcept;
  bool is_full() const noexcept { return std::holds_alternative<Full>(shape_); }
  const Shape& shape() const noexcept { return shape_; }
  std::string to_string() const;

 private:
  Shape shape_;
};

// ----------------------------------------------------------------- profiles

struct DampingProfile {
  TorusGrid grid;
  std::vector<double> values;  // a(x_j) >= 0
  std::optional<Region> omega;

  bool is_zero() const noexcept;
  /// Profile with explicit values; throws if any value is negative.
  static DampingProfile from_values(const TorusGrid& grid, std::vector<double> values);
  static DampingProfile constant(const TorusGrid& grid, double value);
};

struct CutoffProfile {
  TorusGrid grid;
  std::vector<double> values;  // phi(x_j)
  std::optional<Region> region;
  std::optional<Region> inner_region;

  static CutoffProfile from_values(const TorusGrid& grid, std::vector<double> values);
  static CutoffProfile constant(const TorusGrid& grid, double value);
};

/// Smooth bump exp(1 - 1/(1-t^2)) supported in `region`, equal to 1 at the
/// region centre.  Regions must be strict nonempty subsets of the torus.
DampingProfile build_damping_profile(const TorusGrid& grid, const Region& region);

/// Smooth cutoff supported in `region` with phi == 1 on `inner` (which must
/// lie inside `region`).
CutoffProfile build_cutoff_profile(const TorusGrid& grid, const Region& region, const Region& inner);

// ---------------------------------------------------------------------- GCC

struct GccReport {
  bool satisfied = false;
  double t0 = 0.0;
  /// Max over sampled geodesics of the first entry time; +inf when some
  /// geodesic does not enter within the search horizon.
  double worst_entry_time = 0.0;
  std::array<double, 2> witness_start{};
  std::array<double, 2> witness_direction{};
  int n_dirs = 0;
  int n_starts = 0;
};

/// Samples unit-speed straight geodesics on T^d and computes, exactly for
/// each, the first time it enters `omega`.  Directions: +-1 in 1-D,
/// angles 2 pi j / n_dirs in 2-D.  Starts: equispaced in 1-D; in 2-D a
/// square lattice when n_starts is a perfect square, else a golden-ratio
/// lattice.  `horizon` bounds the search (default max(t0, 2 pi n_dirs)).
GccReport check_gcc(const Region& omega, double t0, int n_dirs, int n_starts,
                    std::optional<double> horizon = std::nullopt);

}  // namespace fraq
