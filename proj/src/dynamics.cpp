#include "fraq/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace fraq {

// ------------------------------------------------------------------- config

void EvolutionConfig::validate() const {
  if (!(sigma >= 2.0) || !std::isfinite(sigma)) throw ValidationError("equation.sigma must be >= 2");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("numerics.dt must be > 0");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ValidationError("numerics.t_final must be >= 0");
  if (damping_sign != 1 && damping_sign != -1) throw ValidationError("numerics.damping_sign must be +1 or -1");
  if (!(krylov_tol > 0.0 && krylov_tol <= 1e-6)) throw ValidationError("numerics.krylov_tol must lie in (0, 1e-6]");
  if (!std::isfinite(p0_shift)) throw ValidationError("p0_shift must be finite");
}

std::size_t EvolutionConfig::step_count() const {
  const double steps = t_final / dt;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
    throw ValidationError("numerics.t_final must be an integer multiple of numerics.dt");
  }
  return std::size_t(rounded);
}

std::size_t EvolutionConfig::output_stride() const {
  if (t_out <= 0.0) return 1;
  return std::max<std::size_t>(1, std::size_t(std::ceil(t_out / dt - 1e-9)));
}

ControlSignal time_reversed(const ControlSignal& h) {
  ControlSignal out;
  out.interval = h.interval;
  out.samples.reserve(h.samples.size());
  for (auto it = h.samples.rbegin(); it != h.samples.rend(); ++it) {
    NodalValues v(it->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::conj((*it)[j]);
    out.samples.push_back(std::move(v));
  }
  return out;
}

// ------------------------------------------------------------ free dynamics

SpectralField free_propagate(const SpectralField& u, double t, double sigma, double p0_shift) {
  const auto lambda = Multiplier::fractional_laplacian(u.grid(), sigma);
  auto sym = lambda.symbol();
  SpectralField out = u;
  for (std::size_t i = 0; i < sym.size(); ++i) {
    if (out[i] == cplx{}) continue;
    out[i] *= std::polar(1.0, t * (sym[i] + p0_shift));
  }
  return out;
}

SpectralField free_propagate(const SpectralField& u, double t, const EvolutionConfig& cfg) {
  return free_propagate(u, t, cfg.sigma, cfg.p0_shift);
}

cplx rotate(cplx z, cplx e) {
  const cplx w = z * e;
  const double nw = std::norm(w);
  if (nw == 0.0) return w;
  return w * std::sqrt(std::norm(z) / nw);
}

SpectralField nonlinear_phase_step(const SpectralField& u, double dt, const Nonlinearity& p, double shift) {
  const auto& grid = u.grid();
  const double to_nodes = std::pow(kTwoPi, -0.5 * grid.dim());
  NodalValues vals(grid.size());
  grid.dft_backward(u.coeffs(), vals);
  for (auto& z : vals) {
    const double r = std::norm(z) * to_nodes * to_nodes;
    z = rotate(z, std::polar(1.0, dt * (p.derivative(r) - shift)));
  }
  std::vector<cplx> coeffs(grid.size());
  grid.dft_forward(vals, coeffs);
  const double inv = 1.0 / double(grid.size());
  for (auto& c : coeffs) c *= inv;
  return SpectralField(grid, std::move(coeffs));
}

// ------------------------------------------------------------ SplitStepper

SplitStepper::SplitStepper(const TorusGrid& grid, double sigma, double p0_shift, Nonlinearity p, double dt)
    : grid_(grid), p_(std::move(p)), shift_(p0_shift), dt_(dt), half_propagator_(grid.size()) {
  const auto lambda = Multiplier::fractional_laplacian(grid, sigma);
  auto sym = lambda.symbol();
  for (std::size_t i = 0; i < sym.size(); ++i) half_propagator_[i] = std::polar(1.0, 0.5 * dt * (sym[i] + p0_shift));
  phase_is_trivial_ = p_.is_linear();
  constant_phase_ = p_.derivative_at_zero() - shift_;
}

void SplitStepper::half_linear(SpectralField& u) const {
  for (std::size_t i = 0; i < half_propagator_.size(); ++i) u[i] = rotate(u[i], half_propagator_[i]);
}

void SplitStepper::phase(SpectralField& u, double tau) const {
  if (phase_is_trivial_) {
    if (constant_phase_ != 0.0) {
      const cplx e = std::polar(1.0, tau * constant_phase_);
      for (std::size_t i = 0; i < grid_.size(); ++i) u[i] = rotate(u[i], e);
    }
    return;
  }
  u = nonlinear_phase_step(u, tau, p_, shift_);
}

void SplitStepper::half_nonlinear(SpectralField& u) const { phase(u, 0.5 * dt_); }

void SplitStepper::full_nonlinear(SpectralField& u) const { phase(u, dt_); }

void SplitStepper::kick(SpectralField& u, const NodalValues& h, double weight) const {
  const SpectralField hs = to_spectral(grid_, h);
  u.axpy(cplx(0.0, -weight), hs);
}

void SplitStepper::step(SpectralField& u, const NodalValues* h, double weight) const {
  half_linear(u);
  if (h) {
    half_nonlinear(u);
    kick(u, *h, weight);
    half_nonlinear(u);
  } else {
    full_nonlinear(u);
  }
  half_linear(u);
}

// --------------------------------------------------------------- undamped

namespace {

int forcing_substeps(const ControlSignal& h, double dt) {
  if (!(h.interval > 0.0)) throw ValidationError("forcing interval must be positive");
  const double ratio = h.interval / dt;
  const long sub = std::lround(ratio);
  if (sub < 1 || std::abs(ratio - double(sub)) > 1e-9 * ratio || sub % 2 == 0) {
    throw ValidationError("forcing interval must be an odd integer multiple of numerics.dt");
  }
  return int(sub);
}

void check_finite(const SpectralField& u, double t) {
  if (!u.all_finite()) {
    std::ostringstream os;
    os << "non-finite state at t = " << t;
    throw NumericalError(os.str());
  }
}

}  // namespace

Trajectory integrate_undamped(const SpectralField& u0, const EvolutionConfig& cfg, const Nonlinearity& p,
                              const ControlSignal* forcing) {
  cfg.validate();
  const std::size_t steps = cfg.step_count();
  const std::size_t stride = cfg.output_stride();
  const int sub = forcing && !forcing->empty() ? forcing_substeps(*forcing, cfg.dt) : 1;
  const bool forced = forcing && !forcing->empty();

  Trajectory traj;
  auto record = [&](double t, const SpectralField& u) {
    traj.times.push_back(t);
    traj.reports.push_back(make_report(t, u, p, cfg, 0.0));
    if (cfg.keep_states || traj.states.empty()) {
      traj.states.push_back(u);
    } else {
      traj.states.back() = u;
    }
  };

  SpectralField u = u0;
  record(0.0, u);
  if (u.is_zero() && !forced) {
    for (std::size_t j = 1; j <= steps; ++j) {
      if (j % stride == 0 || j == steps) record(double(j) * cfg.dt, u);
    }
    return traj;
  }

  SplitStepper stepper(u0.grid(), cfg.sigma, cfg.p0_shift, p, cfg.dt);
  for (std::size_t j = 0; j < steps; ++j) {
    const NodalValues* h = nullptr;
    if (forced) {
      const std::size_t node = j / std::size_t(sub);
      if (j % std::size_t(sub) == std::size_t(sub / 2) && node < forcing->samples.size()) {
        h = &forcing->samples[node];
      }
    }
    stepper.step(u, h, forced ? forcing->interval : 0.0);
    if ((j + 1) % stride == 0 || j + 1 == steps) {
      const double t = double(j + 1) * cfg.dt;
      check_finite(u, t);
      record(t, u);
    }
  }
  return traj;
}

// ------------------------------------------------------------------ energy

EnergyParts compute_energy(const SpectralField& u, const Nonlinearity& p, double sigma, bool dealias,
                           double p0_shift) {
  const auto& grid = u.grid();
  EnergyParts e;
  const auto lambda = Multiplier::fractional_laplacian(grid, sigma);
  auto sym = lambda.symbol();
  for (std::size_t i = 0; i < sym.size(); ++i) e.kinetic += sym[i] * std::norm(u[i]);

  SpectralField v = u;
  if (dealias) dealias_in_place(v);
  const NodalValues vals = to_physical(v);
  std::vector<double> density(vals.size());
  for (std::size_t j = 0; j < vals.size(); ++j) {
    const double r = std::norm(vals[j]);
    density[j] = dealias ? p.value(r) - p0_shift * r : p.value(r);
  }
  e.potential = integrate_physical(grid, density);
  if (dealias) {
    const double mass = u.norm_l2();
    e.potential += p0_shift * mass * mass;
  }
  return e;
}

EnergyReport make_report(double t, const SpectralField& u, const Nonlinearity& p, const EvolutionConfig& cfg,
                         double dissipation_integral) {
  EnergyReport r;
  r.t = t;
  const double l2 = u.norm_l2();
  r.mass = l2 * l2;
  r.energy = compute_energy(u, p, cfg.sigma, cfg.dealias, cfg.p0_shift).total();
  r.hs_norm = sobolev_norm(u, SobolevIndex{0.5 * cfg.sigma});
  r.dissipation_integral = dissipation_integral;
  return r;
}

// ------------------------------------------------------------------- decay

DecayFit fit_decay_rate(std::span<const EnergyReport> reports, double t_lo, double t_hi) {
  std::vector<double> ts, ys;
  for (const auto& r : reports) {
    if (r.t < t_lo || r.t > t_hi) continue;
    if (!(r.energy > 0.0)) {
      std::ostringstream os;
      os << "fit_decay_rate: nonpositive energy " << r.energy << " at t = " << r.t;
      throw NumericalError(os.str());
    }
    ts.push_back(r.t);
    ys.push_back(std::log(r.energy));
  }
  if (ts.size() < 10) throw ValidationError("fit_decay_rate: fewer than 10 samples in window");
  const double n = double(ts.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    my += ys[i];
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    sty += (ts[i] - mt) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  DecayFit fit;
  fit.samples = ts.size();
  const double slope = sty / stt;
  fit.gamma = -slope;
  const double ss_res = syy - slope * sty;
  fit.r_squared = syy > 0.0 ? 1.0 - std::max(0.0, ss_res) / syy : 1.0;
  return fit;
}

}  // namespace fraq
