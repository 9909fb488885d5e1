#include "fraq/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

namespace fraq {

namespace detail {

// FFTW's planner is not re-entrant; execution of an existing plan on new
// arrays is. Plans are created unaligned so any caller buffer can be used.
class FftPlans {
 public:
  FftPlans(int dim, int n) {
    static std::mutex planner_mutex;
    std::lock_guard lock(planner_mutex);
    std::size_t total = dim == 1 ? std::size_t(n) : std::size_t(n) * std::size_t(n);
    auto* a = fftw_alloc_complex(total);
    auto* b = fftw_alloc_complex(total);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (dim == 1) {
      forward_ = fftw_plan_dft_1d(n, a, b, FFTW_FORWARD, flags);
      backward_ = fftw_plan_dft_1d(n, a, b, FFTW_BACKWARD, flags);
    } else {
      forward_ = fftw_plan_dft_2d(n, n, a, b, FFTW_FORWARD, flags);
      backward_ = fftw_plan_dft_2d(n, n, a, b, FFTW_BACKWARD, flags);
    }
    fftw_free(a);
    fftw_free(b);
  }
  ~FftPlans() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  void run(bool forward, std::span<const cplx> in, std::span<cplx> out) const {
    // out-of-place plans: alias-safe via a scratch copy
    if (in.data() == out.data()) {
      std::vector<cplx> tmp(in.begin(), in.end());
      execute(forward, tmp.data(), out.data());
    } else {
      execute(forward, const_cast<cplx*>(in.data()), out.data());
    }
  }

 private:
  void execute(bool forward, cplx* in, cplx* out) const {
    fftw_execute_dft(forward ? forward_ : backward_, reinterpret_cast<fftw_complex*>(in),
                     reinterpret_cast<fftw_complex*>(out));
  }

  fftw_plan forward_{};
  fftw_plan backward_{};
};

}  // namespace detail

// ---------------------------------------------------------------- TorusGrid

TorusGrid::TorusGrid(int dim, int n) : dim_(dim), n_(n) {
  if (dim != 1 && dim != 2) {
    throw ValidationError("grid.d must be 1 or 2 (got " + std::to_string(dim) + ")");
  }
  if (n < 8 || n % 2 != 0) {
    throw ValidationError("grid.n must be even and >= 8 (got " + std::to_string(n) + ")");
  }
  size_ = dim == 1 ? std::size_t(n) : std::size_t(n) * std::size_t(n);
  plans_ = std::make_shared<detail::FftPlans>(dim, n);
}

std::size_t TorusGrid::retained_count() const noexcept {
  std::size_t m = std::size_t(n_ - 1);
  return dim_ == 1 ? m : m * m;
}

double TorusGrid::volume() const noexcept { return std::pow(kTwoPi, dim_); }

double TorusGrid::cell_volume() const noexcept { return std::pow(kTwoPi / n_, dim_); }

std::array<double, 2> TorusGrid::point(std::size_t flat) const noexcept {
  if (dim_ == 1) return {node(int(flat)), 0.0};
  return {node(int(flat / n_)), node(int(flat % n_))};
}

std::array<int, 2> TorusGrid::mode(std::size_t flat) const noexcept {
  if (dim_ == 1) return {wavenumber(int(flat)), 0};
  return {wavenumber(int(flat / n_)), wavenumber(int(flat % n_))};
}

std::size_t TorusGrid::index_of(int k1, int k2) const noexcept {
  auto wrap = [this](int k) { return std::size_t(k < 0 ? k + n_ : k); };
  if (dim_ == 1) return wrap(k1);
  return wrap(k1) * std::size_t(n_) + wrap(k2);
}

double TorusGrid::k_squared(std::size_t flat) const noexcept {
  auto k = mode(flat);
  return double(k[0]) * k[0] + double(k[1]) * k[1];
}

bool TorusGrid::is_nyquist(std::size_t flat) const noexcept {
  auto k = mode(flat);
  const int half = n_ / 2;
  return k[0] == half || (dim_ == 2 && k[1] == half);
}

std::size_t TorusGrid::negated(std::size_t flat) const noexcept {
  auto k = mode(flat);
  return index_of(-k[0], -k[1]);
}

void TorusGrid::dft_forward(std::span<const cplx> in, std::span<cplx> out) const {
  plans_->run(true, in, out);
}

void TorusGrid::dft_backward(std::span<const cplx> in, std::span<cplx> out) const {
  plans_->run(false, in, out);
}

// ------------------------------------------------------------ SpectralField

SpectralField::SpectralField(TorusGrid grid) : grid_(std::move(grid)), coeffs_(grid_.size()) {}

SpectralField::SpectralField(TorusGrid grid, std::vector<cplx> coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != grid_.size()) {
    throw ValidationError("coefficient array size " + std::to_string(coeffs_.size()) +
                          " does not match grid size " + std::to_string(grid_.size()));
  }
  project_nyquist();
}

SpectralField SpectralField::mode(const TorusGrid& grid, int k1, int k2, cplx amplitude) {
  const int half = grid.n() / 2;
  if (std::abs(k1) >= half || (grid.dim() == 2 && std::abs(k2) >= half)) {
    throw ValidationError("mode outside the retained lattice");
  }
  SpectralField f(grid);
  f.coeffs_[grid.index_of(k1, k2)] = amplitude;
  return f;
}

void SpectralField::require_same_grid(const SpectralField& other) const {
  if (!(grid_ == other.grid_)) throw ValidationError("fields live on different grids");
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  require_same_grid(other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  require_same_grid(other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(cplx scale) noexcept {
  for (auto& c : coeffs_) c *= scale;
  return *this;
}

SpectralField& SpectralField::axpy(cplx scale, const SpectralField& other) {
  require_same_grid(other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += scale * other.coeffs_[i];
  return *this;
}

double SpectralField::norm_l2() const noexcept {
  double s = 0.0;
  for (const auto& c : coeffs_) s += std::norm(c);
  return std::sqrt(s);
}

bool SpectralField::is_zero() const noexcept {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](cplx c) { return c == cplx{}; });
}

bool SpectralField::all_finite() const noexcept {
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [](cplx c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

void SpectralField::project_nyquist() noexcept {
  const int n = grid_.n();
  const int half = n / 2;
  if (grid_.dim() == 1) {
    coeffs_[half] = 0.0;
    return;
  }
  for (int i = 0; i < n; ++i) {
    coeffs_[std::size_t(half) * n + i] = 0.0;
    coeffs_[std::size_t(i) * n + half] = 0.0;
  }
}

cplx inner(const SpectralField& u, const SpectralField& v) {
  if (!(u.grid() == v.grid())) throw ValidationError("fields live on different grids");
  cplx s{};
  auto a = u.coeffs();
  auto b = v.coeffs();
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
  return s;
}

// ---------------------------------------------------------------- transforms

SpectralField to_spectral(const TorusGrid& grid, std::span<const cplx> values) {
  if (values.size() != grid.size()) {
    throw ValidationError("sample array size " + std::to_string(values.size()) +
                          " does not match grid size " + std::to_string(grid.size()));
  }
  std::vector<cplx> coeffs(grid.size());
  grid.dft_forward(values, coeffs);
  const double scale = std::pow(kTwoPi, 0.5 * grid.dim()) / double(grid.size());
  for (auto& c : coeffs) c *= scale;
  return SpectralField(grid, std::move(coeffs));
}

NodalValues to_physical(const SpectralField& u) {
  const auto& grid = u.grid();
  NodalValues out(grid.size());
  grid.dft_backward(u.coeffs(), out);
  const double scale = std::pow(kTwoPi, -0.5 * grid.dim());
  for (auto& v : out) v *= scale;
  return out;
}

SpectralField conjugate(const SpectralField& u) {
  const auto& grid = u.grid();
  SpectralField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_nyquist(i)) continue;
    out[i] = std::conj(u[grid.negated(i)]);
  }
  return out;
}

// ---------------------------------------------------------------- Multiplier

Multiplier::Multiplier(TorusGrid grid, std::vector<double> symbol, double order)
    : grid_(std::move(grid)), symbol_(std::move(symbol)), order_(order), bound_(0.0) {
  if (symbol_.size() != grid_.size()) throw ValidationError("symbol size does not match grid");
  for (std::size_t i = 0; i < symbol_.size(); ++i) {
    if (!std::isfinite(symbol_[i])) throw ValidationError("multiplier symbol is not finite");
    if (grid_.is_nyquist(i)) continue;
    const double weight = std::pow(1.0 + grid_.k_squared(i), 0.5 * order_);
    bound_ = std::max(bound_, std::abs(symbol_[i]) / weight);
  }
}

Multiplier Multiplier::fractional_laplacian(const TorusGrid& grid, double sigma) {
  std::vector<double> sym(grid.size());
  for (std::size_t i = 0; i < sym.size(); ++i) {
    const double k2 = grid.k_squared(i);
    sym[i] = k2 == 0.0 ? 0.0 : std::pow(k2, 0.5 * sigma);
  }
  return Multiplier(grid, std::move(sym), sigma);
}

Multiplier Multiplier::bessel(const TorusGrid& grid, double s) {
  std::vector<double> sym(grid.size());
  for (std::size_t i = 0; i < sym.size(); ++i) sym[i] = std::pow(1.0 + grid.k_squared(i), 0.5 * s);
  return Multiplier(grid, std::move(sym), s);
}

Multiplier operator*(const Multiplier& a, const Multiplier& b) {
  if (!(a.grid_ == b.grid_)) throw ValidationError("multipliers live on different grids");
  std::vector<double> sym(a.symbol_.size());
  for (std::size_t i = 0; i < sym.size(); ++i) sym[i] = a.symbol_[i] * b.symbol_[i];
  return Multiplier(a.grid_, std::move(sym), a.order_ + b.order_);
}

void apply_in_place(const Multiplier& m, SpectralField& u) {
  if (!(m.grid() == u.grid())) throw ValidationError("multiplier and field live on different grids");
  auto sym = m.symbol();
  for (std::size_t i = 0; i < sym.size(); ++i) u[i] *= sym[i];
}

SpectralField apply(const Multiplier& m, const SpectralField& u) {
  SpectralField out = u;
  apply_in_place(m, out);
  return out;
}

double sobolev_norm(const SpectralField& u, SobolevIndex s) {
  const auto& grid = u.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (u[i] == cplx{}) continue;
    acc += std::pow(1.0 + grid.k_squared(i), s.value) * std::norm(u[i]);
  }
  return std::sqrt(acc);
}

double integrate_physical(const TorusGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) {
    throw ValidationError("sample array size " + std::to_string(values.size()) +
                          " does not match grid size " + std::to_string(grid.size()));
  }
  double s = 0.0;
  for (double v : values) s += v;
  return grid.cell_volume() * s;
}

std::vector<bool> dealias_mask(const TorusGrid& grid) {
  const int cut = grid.n() / 3;
  std::vector<bool> keep(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto k = grid.mode(i);
    keep[i] = std::abs(k[0]) <= cut && std::abs(k[1]) <= cut;
  }
  return keep;
}

void dealias_in_place(SpectralField& u) {
  const auto keep = dealias_mask(u.grid());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!keep[i]) u[i] = 0.0;
  }
}

}  // namespace fraq
