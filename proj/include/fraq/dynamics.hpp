#pragma once

// Time integration of
//
//   i u_t + Lambda^sigma u + P'(|u|^2) u + damping_sign * a K a u_t = h,
//   K = (1 - Delta)^{-sigma/2},
//
// on the torus.  The stiff linear part L = Lambda^sigma + p0_shift is always
// integrated exactly in Fourier space; what remains is bounded.  With
// damping_sign = +1 the energy is non-increasing:
//   dE/dt = -2 || (1 - Delta)^{-sigma/4} a u_t ||^2.

#include <optional>
#include <vector>

#include "fraq/model.hpp"
#include "fraq/spectral.hpp"

namespace fraq {

struct EvolutionConfig {
  double sigma = 2.0;
  /// Constant folded into the linear generator (normally P'(0) + gauge).
  double p0_shift = 0.0;
  double dt = 1e-3;
  double t_final = 1.0;
  int damping_sign = +1;
  double krylov_tol = 1e-12;
  bool dealias = false;
  /// Report spacing; <= 0 reports every step.
  double t_out = 0.0;
  /// Keep state snapshots at report instants.
  bool keep_states = true;

  void validate() const;
  std::size_t step_count() const;
  std::size_t output_stride() const;
};

struct EnergyReport {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double hs_norm = 0.0;
  double dissipation_integral = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralField> states;
  std::vector<EnergyReport> reports;

  const SpectralField& final_state() const { return states.back(); }
};

/// Forcing h(t) given as impulses: sample m acts at t = (m + 1/2) * interval
/// (relative to the start of integration) with weight `interval`, i.e. the
/// midpoint rule for the Duhamel integral. Samples are nodal values so that
/// spatial support can be checked exactly.
struct ControlSignal {
  double interval = 0.0;
  std::vector<NodalValues> samples;

  double duration() const noexcept { return interval * double(samples.size()); }
  bool empty() const noexcept { return samples.empty(); }
};

/// Reversed, conjugated forcing: the control driving t -> conj(u(T - t)).
ControlSignal time_reversed(const ControlSignal& h);

// ------------------------------------------------------------ free dynamics

/// u_k <- exp(i t (|k|^sigma + p0_shift)) u_k.
SpectralField free_propagate(const SpectralField& u, double t, double sigma, double p0_shift);
SpectralField free_propagate(const SpectralField& u, double t, const EvolutionConfig& cfg);

/// z * e rescaled to |z|; e is a unit phase.
cplx rotate(cplx z, cplx e);

/// Pointwise u(x) <- exp(i dt (P'(|u(x)|^2) - shift)) u(x).
SpectralField nonlinear_phase_step(const SpectralField& u, double dt, const Nonlinearity& p, double shift = 0.0);

/// Building blocks of one Strang step
///   A(dt/2) B(dt/2) [kick] B(dt/2) A(dt/2),
/// A the exact linear flow, B the exact pointwise phase flow, and the kick
/// u += -i w h the midpoint Duhamel contribution of the forcing.
class SplitStepper {
 public:
  SplitStepper(const TorusGrid& grid, double sigma, double p0_shift, Nonlinearity p, double dt);

  double dt() const noexcept { return dt_; }
  void half_linear(SpectralField& u) const;
  void half_nonlinear(SpectralField& u) const;
  void full_nonlinear(SpectralField& u) const;
  void kick(SpectralField& u, const NodalValues& h, double weight) const;
  /// One full step, with an optional kick at the step midpoint.
  void step(SpectralField& u, const NodalValues* h = nullptr, double weight = 0.0) const;

 private:
  void phase(SpectralField& u, double tau) const;

  TorusGrid grid_;
  Nonlinearity p_;
  double shift_;
  double dt_;
  bool phase_is_trivial_;
  double constant_phase_;  // used when P' is constant
  std::vector<cplx> half_propagator_;
};

/// Strang splitting for the undamped equation, optionally forced.  The
/// forcing interval must be an odd multiple of cfg.dt; forcing vanishes after
/// its duration.  Mass is conserved to round-off when unforced.
Trajectory integrate_undamped(const SpectralField& u0, const EvolutionConfig& cfg, const Nonlinearity& p,
                              const ControlSignal* forcing = nullptr);

// ----------------------------------------------------------------- energy

struct EnergyParts {
  double kinetic = 0.0;    // sum_k |k|^sigma |u_k|^2
  double potential = 0.0;  // quadrature of P(|u|^2)
  double total() const noexcept { return kinetic + potential; }
};

/// E = ||Lambda^{sigma/2} u||^2 + int P(|u|^2).  With `dealias`, the energy
/// conserved by the dealiased semi-discretization is returned instead.
EnergyParts compute_energy(const SpectralField& u, const Nonlinearity& p, double sigma, bool dealias = false,
                           double p0_shift = 0.0);

EnergyReport make_report(double t, const SpectralField& u, const Nonlinearity& p, const EvolutionConfig& cfg,
                         double dissipation_integral);

// ----------------------------------------------------------------- damping

/// M = a (1 - Delta)^{-sigma/2} a, self-adjoint and positive semidefinite.
class DampingOperator {
 public:
  DampingOperator(const DampingProfile& a, double sigma);

  SpectralField apply(const SpectralField& w) const;
  /// a K a w as nodal values (exactly zero where a = 0).
  NodalValues apply_nodal(const SpectralField& w) const;
  /// 2 ||(1 - Delta)^{-sigma/4} a w||^2
  double dissipation_rate(const SpectralField& w) const;
  bool is_zero() const noexcept { return zero_; }
  const DampingProfile& profile() const noexcept { return a_; }

 private:
  SpectralField smoothed_product(const SpectralField& w) const;  // K (a w)

  DampingProfile a_;
  Multiplier smoothing_;
  bool zero_;
};

struct ResolventStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves (1 - i sign M) w = rhs matrix-free, to
/// ||(1 - i sign M) w - rhs|| <= tol ||rhs||.  Uses conjugate gradients on
/// (1 + M^2) w = (1 + i sign M) rhs, exact since M is self-adjoint.
SpectralField solve_damping_resolvent(const SpectralField& rhs, const DampingOperator& m, int sign, double tol,
                                      ResolventStats* stats = nullptr, int max_iterations = 500);
SpectralField solve_damping_resolvent(const SpectralField& rhs, const DampingProfile& a, const EvolutionConfig& cfg,
                                      ResolventStats* stats = nullptr);

/// Right-hand side of the damped equation written as u_t = i L u + N(u).
class DampedField {
 public:
  DampedField(const DampingProfile& a, const EvolutionConfig& cfg, Nonlinearity p);

  /// Bounded remainder N(u) = i (1 - i s M)^{-1} [Q(|u|^2) u + i s M L u].
  SpectralField remainder(const SpectralField& u) const;
  /// u_t = i L u + N(u).
  SpectralField time_derivative(const SpectralField& u) const;
  /// Feedback term written as a forcing: h = -s M u_t, nodal.
  NodalValues feedback_forcing(const SpectralField& u) const;

  const DampingOperator& damping() const noexcept { return m_; }
  const std::vector<double>& generator() const noexcept { return generator_; }

 private:
  SpectralField apply_generator(const SpectralField& u) const;

  EvolutionConfig cfg_;
  Nonlinearity p_;
  DampingOperator m_;
  std::vector<double> generator_;  // |k|^sigma + p0_shift
};

/// Lawson (integrating-factor) RK4 for the damped equation.  Reports carry
/// the accumulated dissipation integral (trapezoid rule on the exact
/// stage-one time derivative), signed so that
///   E(t) - E(0) + dissipation_integral(t) = 0
/// up to discretization error.  An identically zero profile reduces to
/// integrate_undamped.
Trajectory integrate_damped(const SpectralField& u0, const DampingProfile& a, const EvolutionConfig& cfg,
                            const Nonlinearity& p);

// ------------------------------------------------------------------ decay

struct DecayFit {
  double gamma = 0.0;
  double r_squared = 1.0;
  std::size_t samples = 0;
};

/// Least-squares fit log E(t) ~ c - gamma t over reports with t in [t_lo, t_hi].
DecayFit fit_decay_rate(std::span<const EnergyReport> reports, double t_lo, double t_hi);

}  // namespace fraq
