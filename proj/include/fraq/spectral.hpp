#pragma once

// Fourier calculus on the flat torus T^d = [0, 2pi)^d, d in {1, 2}.
//
// States are stored as coefficients relative to the orthonormal basis
// phi_k(x) = (2pi)^{-d/2} exp(i k.x), in FFT index order (row-major over
// axes).  The Nyquist frequencies k_i = -n/2 are never retained: every
// SpectralField keeps them identically zero, so the retained lattice is
// symmetric under k -> -k.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fraq/errors.hpp"

namespace fraq {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

namespace detail {
class FftPlans;
}

class TorusGrid {
 public:
  /// Throws ValidationError unless dim in {1, 2} and n is even and >= 8.
  TorusGrid(int dim, int n);

  int dim() const noexcept { return dim_; }
  int n() const noexcept { return n_; }
  /// Number of collocation nodes (= stored coefficients), n^d.
  std::size_t size() const noexcept { return size_; }
  /// Number of retained (non-Nyquist) modes, (n-1)^d.
  std::size_t retained_count() const noexcept;
  double volume() const noexcept;
  /// Quadrature weight (2pi/n)^d.
  double cell_volume() const noexcept;

  double node(int j) const noexcept { return kTwoPi * j / n_; }
  /// Physical coordinates of flat node index (second entry 0 in 1-D).
  std::array<double, 2> point(std::size_t flat) const noexcept;

  /// Signed wavenumber of an FFT index along one axis.
  int wavenumber(int index) const noexcept { return index <= n_ / 2 ? index : index - n_; }
  /// Integer wavevector (k1, k2) of flat index (k2 = 0 in 1-D).
  std::array<int, 2> mode(std::size_t flat) const noexcept;
  /// Flat index of wavevector k (k2 ignored in 1-D); k must satisfy |k_i| <= n/2.
  std::size_t index_of(int k1, int k2 = 0) const noexcept;
  double k_squared(std::size_t flat) const noexcept;
  bool is_nyquist(std::size_t flat) const noexcept;
  /// Flat index of -k.
  std::size_t negated(std::size_t flat) const noexcept;

  /// Unnormalized forward DFT: out_k = sum_j in_j exp(-i k.x_j).
  void dft_forward(std::span<const cplx> in, std::span<cplx> out) const;
  /// Unnormalized inverse DFT: out_j = sum_k in_k exp(i k.x_j).
  void dft_backward(std::span<const cplx> in, std::span<cplx> out) const;

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) noexcept {
    return a.dim_ == b.dim_ && a.n_ == b.n_;
  }

 private:
  int dim_;
  int n_;
  std::size_t size_;
  std::shared_ptr<detail::FftPlans> plans_;
};

/// Complex nodal samples on a grid, row-major.
using NodalValues = std::vector<cplx>;

class SpectralField {
 public:
  explicit SpectralField(TorusGrid grid);
  SpectralField(TorusGrid grid, std::vector<cplx> coeffs);

  static SpectralField zeros(const TorusGrid& grid) { return SpectralField(grid); }
  /// Single retained mode with the given amplitude.
  static SpectralField mode(const TorusGrid& grid, int k1, int k2, cplx amplitude);

  const TorusGrid& grid() const noexcept { return grid_; }
  std::span<cplx> coeffs() noexcept { return coeffs_; }
  std::span<const cplx> coeffs() const noexcept { return coeffs_; }
  cplx& operator[](std::size_t i) noexcept { return coeffs_[i]; }
  const cplx& operator[](std::size_t i) const noexcept { return coeffs_[i]; }
  cplx at(int k1, int k2 = 0) const noexcept { return coeffs_[grid_.index_of(k1, k2)]; }

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(cplx scale) noexcept;
  /// this += scale * other
  SpectralField& axpy(cplx scale, const SpectralField& other);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(cplx s, SpectralField a) { return a *= s; }

  double norm_l2() const noexcept;
  bool is_zero() const noexcept;
  bool all_finite() const noexcept;
  /// Zero the Nyquist coefficients in place.
  void project_nyquist() noexcept;

 private:
  void require_same_grid(const SpectralField& other) const;

  TorusGrid grid_;
  std::vector<cplx> coeffs_;
};

/// Complex L^2 inner product <u, v> = sum_k u_k conj(v_k).
cplx inner(const SpectralField& u, const SpectralField& v);

/// Samples on the grid -> orthonormal coefficients, Nyquist projected out.
SpectralField to_spectral(const TorusGrid& grid, std::span<const cplx> values);
/// Coefficients -> samples at the collocation nodes.
NodalValues to_physical(const SpectralField& u);

/// Physical complex conjugation: u_k -> conj(u_{-k}).
SpectralField conjugate(const SpectralField& u);

struct SobolevIndex {
  double value = 0.0;
};

/// Real Fourier symbol m(k) acting diagonally on coefficients.
class Multiplier {
 public:
  /// `order` is the declared growth exponent mu; the constant C in
  /// |m(k)| <= C (1+|k|^2)^{mu/2} is computed here.
  Multiplier(TorusGrid grid, std::vector<double> symbol, double order);

  /// Lambda^sigma = (sqrt(-Delta))^sigma, symbol |k|^sigma.
  static Multiplier fractional_laplacian(const TorusGrid& grid, double sigma);
  /// (1 - Delta)^{s/2}, symbol (1+|k|^2)^{s/2}.
  static Multiplier bessel(const TorusGrid& grid, double s);

  const TorusGrid& grid() const noexcept { return grid_; }
  std::span<const double> symbol() const noexcept { return symbol_; }
  double order() const noexcept { return order_; }
  double bound_constant() const noexcept { return bound_; }

  /// Pointwise product of symbols; orders add.
  friend Multiplier operator*(const Multiplier& a, const Multiplier& b);

 private:
  TorusGrid grid_;
  std::vector<double> symbol_;
  double order_;
  double bound_;
};

SpectralField apply(const Multiplier& m, const SpectralField& u);
void apply_in_place(const Multiplier& m, SpectralField& u);

/// (sum_k (1+|k|^2)^s |u_k|^2)^{1/2}
double sobolev_norm(const SpectralField& u, SobolevIndex s);

/// Rectangle rule (2pi/n)^d sum_j values_j.
double integrate_physical(const TorusGrid& grid, std::span<const double> values);

/// Mask of modes kept by the 2/3 rule (|k_i| <= n/3 on every axis).
std::vector<bool> dealias_mask(const TorusGrid& grid);
void dealias_in_place(SpectralField& u);

}  // namespace fraq
