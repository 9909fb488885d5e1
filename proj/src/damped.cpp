#include <cmath>
#include <sstream>

#include "fraq/dynamics.hpp"

namespace fraq {

// ---------------------------------------------------------- DampingOperator

DampingOperator::DampingOperator(const DampingProfile& a, double sigma)
    : a_(a), smoothing_(Multiplier::bessel(a.grid, -sigma)), zero_(a.is_zero()) {}

SpectralField DampingOperator::smoothed_product(const SpectralField& w) const {
  NodalValues vals = to_physical(w);
  for (std::size_t j = 0; j < vals.size(); ++j) vals[j] *= a_.values[j];
  SpectralField aw = to_spectral(a_.grid, vals);
  apply_in_place(smoothing_, aw);
  return aw;
}

NodalValues DampingOperator::apply_nodal(const SpectralField& w) const {
  if (zero_) return NodalValues(w.grid().size());
  NodalValues vals = to_physical(smoothed_product(w));
  for (std::size_t j = 0; j < vals.size(); ++j) vals[j] *= a_.values[j];
  return vals;
}

SpectralField DampingOperator::apply(const SpectralField& w) const {
  if (zero_) return SpectralField::zeros(w.grid());
  return to_spectral(a_.grid, apply_nodal(w));
}

double DampingOperator::dissipation_rate(const SpectralField& w) const {
  if (zero_) return 0.0;
  NodalValues vals = to_physical(w);
  for (std::size_t j = 0; j < vals.size(); ++j) vals[j] *= a_.values[j];
  const SpectralField aw = to_spectral(a_.grid, vals);
  // (1 - Delta)^{-sigma/4} squared is the smoothing symbol itself
  auto sym = smoothing_.symbol();
  double acc = 0.0;
  for (std::size_t i = 0; i < sym.size(); ++i) acc += sym[i] * std::norm(aw[i]);
  return 2.0 * acc;
}

// --------------------------------------------------------------- resolvent

SpectralField solve_damping_resolvent(const SpectralField& rhs, const DampingOperator& m, int sign, double tol,
                                      ResolventStats* stats, int max_iterations) {
  const double rhs_norm = rhs.norm_l2();
  if (m.is_zero() || rhs_norm == 0.0) {
    if (stats) *stats = {};
    return rhs;
  }
  const cplx is(0.0, double(sign));
  // normal equations: (1 + M^2) w = (1 + i s M) rhs
  SpectralField b = rhs;
  b.axpy(is, m.apply(rhs));
  SpectralField w = SpectralField::zeros(rhs.grid());
  SpectralField r = b;
  SpectralField p = r;
  double rr = std::real(inner(r, r));
  int it = 0;
  while (std::sqrt(rr) > tol * rhs_norm) {
    if (it >= max_iterations) {
      std::ostringstream os;
      os << "damping resolvent: no convergence after " << it << " iterations (residual "
         << std::sqrt(rr) / rhs_norm << ")";
      throw NumericalError(os.str());
    }
    SpectralField ap = p;
    ap += m.apply(m.apply(p));
    const double alpha = rr / std::real(inner(ap, p));
    w.axpy(alpha, p);
    r.axpy(-alpha, ap);
    const double rr_new = std::real(inner(r, r));
    p *= rr_new / rr;
    p += r;
    rr = rr_new;
    ++it;
  }
  if (stats) {
    SpectralField res = w;
    res.axpy(-is, m.apply(w));
    res -= rhs;
    stats->iterations = it;
    stats->relative_residual = res.norm_l2() / rhs_norm;
  }
  return w;
}

SpectralField solve_damping_resolvent(const SpectralField& rhs, const DampingProfile& a, const EvolutionConfig& cfg,
                                      ResolventStats* stats) {
  cfg.validate();
  DampingOperator m(a, cfg.sigma);
  return solve_damping_resolvent(rhs, m, cfg.damping_sign, cfg.krylov_tol, stats);
}

// ------------------------------------------------------------- DampedField

DampedField::DampedField(const DampingProfile& a, const EvolutionConfig& cfg, Nonlinearity p)
    : cfg_(cfg), p_(std::move(p)), m_(a, cfg.sigma), generator_(a.grid.size()) {
  const auto lambda = Multiplier::fractional_laplacian(a.grid, cfg.sigma);
  auto sym = lambda.symbol();
  for (std::size_t i = 0; i < sym.size(); ++i) generator_[i] = sym[i] + cfg.p0_shift;
}

SpectralField DampedField::apply_generator(const SpectralField& u) const {
  SpectralField out = u;
  for (std::size_t i = 0; i < generator_.size(); ++i) out[i] *= generator_[i];
  return out;
}

SpectralField DampedField::remainder(const SpectralField& u) const {
  SpectralField f = p_.is_linear() && p_.derivative_at_zero() == cfg_.p0_shift
                        ? SpectralField::zeros(u.grid())
                        : eval_nonlinear_remainder(u, p_, cfg_.p0_shift, cfg_.dealias);
  if (!m_.is_zero()) f.axpy(cplx(0.0, double(cfg_.damping_sign)), m_.apply(apply_generator(u)));
  SpectralField n = solve_damping_resolvent(f, m_, cfg_.damping_sign, cfg_.krylov_tol);
  n *= cplx(0.0, 1.0);
  return n;
}

SpectralField DampedField::time_derivative(const SpectralField& u) const {
  SpectralField ut = remainder(u);
  for (std::size_t i = 0; i < generator_.size(); ++i) ut[i] += cplx(0.0, generator_[i]) * u[i];
  return ut;
}

NodalValues DampedField::feedback_forcing(const SpectralField& u) const {
  NodalValues h = m_.apply_nodal(time_derivative(u));
  const double s = -double(cfg_.damping_sign);
  for (auto& z : h) z *= s;
  return h;
}

// ---------------------------------------------------------- Lawson RK4

Trajectory integrate_damped(const SpectralField& u0, const DampingProfile& a, const EvolutionConfig& cfg,
                            const Nonlinearity& p) {
  cfg.validate();
  if (!(a.grid == u0.grid())) throw ValidationError("damping profile and state live on different grids");
  if (a.is_zero() || u0.is_zero()) return integrate_undamped(u0, cfg, p);

  const std::size_t steps = cfg.step_count();
  const std::size_t stride = cfg.output_stride();
  const double h = cfg.dt;
  DampedField field(a, cfg, p);
  const auto& gen = field.generator();
  std::vector<cplx> e_half(gen.size()), e_full(gen.size());
  for (std::size_t i = 0; i < gen.size(); ++i) {
    e_half[i] = std::polar(1.0, 0.5 * h * gen[i]);
    e_full[i] = std::polar(1.0, h * gen[i]);
  }
  auto propagate = [](const SpectralField& u, const std::vector<cplx>& e) {
    SpectralField out = u;
    for (std::size_t i = 0; i < e.size(); ++i) out[i] *= e[i];
    return out;
  };
  auto dissipation = [&](const SpectralField& u, const SpectralField& k1) {
    SpectralField ut = k1;
    for (std::size_t i = 0; i < gen.size(); ++i) ut[i] += cplx(0.0, gen[i]) * u[i];
    return field.damping().dissipation_rate(ut);
  };

  Trajectory traj;
  double integral = 0.0;
  auto record = [&](double t, const SpectralField& u) {
    traj.times.push_back(t);
    traj.reports.push_back(make_report(t, u, p, cfg, integral));
    if (cfg.keep_states || traj.states.empty()) {
      traj.states.push_back(u);
    } else {
      traj.states.back() = u;
    }
  };

  SpectralField u = u0;
  SpectralField k1 = field.remainder(u);
  double d_prev = dissipation(u, k1);
  const double sign = double(cfg.damping_sign);
  record(0.0, u);
  for (std::size_t j = 0; j < steps; ++j) {
    SpectralField base_half = propagate(u, e_half);

    SpectralField u2 = u;
    u2.axpy(0.5 * h, k1);
    u2 = propagate(u2, e_half);
    const SpectralField k2 = field.remainder(u2);

    SpectralField u3 = base_half;
    u3.axpy(0.5 * h, k2);
    const SpectralField k3 = field.remainder(u3);

    SpectralField u4 = propagate(u, e_full);
    u4.axpy(h, propagate(k3, e_half));
    const SpectralField k4 = field.remainder(u4);

    SpectralField next = propagate(u, e_full);
    next.axpy(h / 6.0, propagate(k1, e_full));
    SpectralField mid = k2;
    mid += k3;
    next.axpy(h / 3.0, propagate(mid, e_half));
    next.axpy(h / 6.0, k4);
    u = std::move(next);

    k1 = field.remainder(u);
    const double d_next = dissipation(u, k1);
    integral += sign * 0.5 * h * (d_prev + d_next);
    d_prev = d_next;

    if ((j + 1) % stride == 0 || j + 1 == steps) {
      const double t = double(j + 1) * h;
      if (!u.all_finite()) {
        std::ostringstream os;
        os << "non-finite state at t = " << t;
        throw NumericalError(os.str());
      }
      record(t, u);
    }
  }
  return traj;
}

}  // namespace fraq
