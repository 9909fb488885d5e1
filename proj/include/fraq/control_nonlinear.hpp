#pragma once

// Nonlinear exact control: local fixed-point iteration around HUM and the
// global stabilize-then-steer construction.
//
// All nonlinear flows are Strang-split with dt = dtau / substeps, so that a
// control sampled on the quadrature lattice acts exactly as in the linear
// Duhamel sum.  Backward solves integrate the conjugated, time-reversed
// equation forward.

#include <optional>
#include <string>
#include <vector>

#include "fraq/control_linear.hpp"
#include "fraq/dynamics.hpp"

namespace fraq {

struct LocalControlOptions {
  double fp_tol = 1e-6;
  int max_iter = 20;
  /// Both endpoint states must satisfy ||.||_{H^s} <= smallness_radius.
  double smallness_radius = 5e-2;
  double cg_tol = 1e-12;
  /// Odd number of Strang steps per control sample.
  int substeps = 5;
  double relaxation = 1.0;
};

struct FixedPointState {
  SpectralField phi0;
  SpectralField achieved_u0;  // L phi0
  double residual = 0.0;      // ||L phi0 - u0||_{H^s}
  int iteration = 0;
  double relaxation = 1.0;
  bool accepted = true;
};

struct LocalControlResult {
  ControlResult control;
  std::vector<FixedPointState> history;
  bool converged = false;
  /// Ratios of consecutive accepted residuals.
  std::vector<double> contraction_factors;
};

/// Initial state reached by the controlled nonlinear equation run backward
/// from `target` with control h_m = A exp(i tau_m L) phi0.
SpectralField backward_initial_state(const SpectralField& phi0, const SpectralField& target, const GramianSpec& spec,
                                     const Nonlinearity& p, int substeps);

/// Iterates phi0 <- phi0 + omega S^{-1}(u0 - L phi0), S = i Gamma.  The
/// relaxation omega is halved whenever the residual grows; two growths in
/// a row abort with NumericalError.  spec.p0_shift must equal P'(0).
LocalControlResult solve_local_control(const SpectralField& u0, const SpectralField& v_target,
                                       const GramianSpec& spec, const Nonlinearity& p,
                                       const LocalControlOptions& opts = {});

struct StabilizationResult {
  SpectralField small_state;
  double t_reached = 0.0;
  double achieved_norm = 0.0;  // ||u||_{H^{sigma/2}} at t_reached
  ControlSignal forcing;       // one sample per step, interval = cfg.dt
};

/// Runs the damped system as a forced undamped one: each Strang step gets a
/// midpoint kick by h = -s a K a u_t.  Stops once ||u||_{H^{sigma/2}} <= eps
/// (checked every step) or throws NumericalError at t_cap.
StabilizationResult stabilize_to_ball(const SpectralField& u0, const DampingProfile& a, double eps_small,
                                      const EvolutionConfig& cfg, const Nonlinearity& p, double t_cap);

struct ControlSegment {
  std::string phase;
  double dt = 0.0;
  double duration = 0.0;
  ControlSignal signal;  // empty: free evolution
};

struct VerificationReport {
  SpectralField final_state;
  double residual_l2 = 0.0;
  double residual_energy = 0.0;  // H^{sigma/2}
  /// max |h| over nodes where control is not allowed; 0 when no mask given
  double support_violation = 0.0;
};

/// Forward-integrates the forced equation through the segments.  `cfg`
/// supplies sigma and p0_shift; `allowed` marks nodes inside the control
/// region.
VerificationReport verify_control(const SpectralField& u0, std::span<const ControlSegment> segments,
                                  const SpectralField& v_target, const EvolutionConfig& cfg, const Nonlinearity& p,
                                  const std::vector<bool>* allowed = nullptr);

struct GlobalControlOptions {
  double eps_small = 4e-2;
  double t_cap = 400.0;
  double stabilization_dt = 1e-2;
  LocalControlOptions local;
};

struct GlobalControlPlan {
  StabilizationResult phase_a;
  StabilizationResult phase_b;  // from conj(v0), before reversal
  std::optional<LocalControlResult> phase_c;
  std::vector<ControlSegment> segments;  // stitched control, in time order
  double total_time = 0.0;
  VerificationReport verification;
  /// Time-reversed phase B re-simulated from its small end state.
  double reversal_residual = 0.0;
  std::optional<GccReport> gcc;
  std::vector<bool> allowed;  // a != 0 or phi != 0
};

/// Stabilize u0 (phase A) and conj(v0) (phase B), join the small states
/// with local control (phase C), glue phase B in reversed time, verify by
/// re-simulation.  The GCC report for the damping region is attached.
GlobalControlPlan solve_global_control(const SpectralField& u0, const SpectralField& v0, const DampingProfile& a,
                                       const GramianSpec& spec, const Nonlinearity& p,
                                       const GlobalControlOptions& opts = {});

}  // namespace fraq
