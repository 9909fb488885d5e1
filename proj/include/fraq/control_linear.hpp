#pragma once

// HUM synthesis for the linear flow u_t = i L u - i h, L = Lambda^sigma + p0.
//
// Control operator A = phi (1 - Delta)^{-s} phi.  Midpoint Gramian
//   Gamma v = sum_m dtau exp(-i tau_m L) A exp(i tau_m L) v,
// tau_m = (m + 1/2) dtau, dtau = T / n_quad.  The control h_m = A exp(i tau_m L) z
// with Gamma z = -i u0 drives u0 to zero under the discrete Duhamel sum.

#include <optional>
#include <string>

#include "fraq/dynamics.hpp"
#include "fraq/model.hpp"
#include "fraq/spectral.hpp"

namespace fraq {

struct GramianSpec {
  double t_horizon = 1.0;
  SobolevIndex s{1.0};
  double sigma = 2.0;
  double p0_shift = 0.0;
  CutoffProfile phi;
  int n_quad = 64;
  /// Precondition CG with (1 - Delta)^s.
  bool precondition = true;

  const TorusGrid& grid() const noexcept { return phi.grid; }
  double quad_step() const noexcept { return t_horizon / n_quad; }
  double node(int m) const noexcept { return (m + 0.5) * quad_step(); }
  void validate() const;
};

/// phi (1 - Delta)^{-s} phi v.
SpectralField apply_control_operator(const SpectralField& v, const CutoffProfile& phi, SobolevIndex s);
/// Same, returned as nodal values (exactly zero where phi = 0).
NodalValues apply_control_operator_nodal(const SpectralField& v, const CutoffProfile& phi, SobolevIndex s);

SpectralField apply_gramian(const SpectralField& v0, const GramianSpec& spec);

struct ControlResult {
  SpectralField seed;            // z
  ControlSignal control;         // h(tau_m), nodal
  SpectralField target;
  SpectralField achieved_final;  // discrete Duhamel endpoint
  double residual_l2 = 0.0;
  double residual_hs = 0.0;
  /// ||achieved - target|| / ||u0 - exp(-iTL) target|| (L^2).
  double relative_residual = 0.0;
  int cg_iterations = 0;
  std::optional<double> observability_estimate;
  /// Endpoint L^2 residual when h(t) = A exp(itL) z is applied on a refined
  /// lattice by integrate_undamped.
  std::optional<double> continuous_residual;

  /// Zero seed and control, achieved == target.
  static ControlResult empty(const SpectralField& target) {
    return {SpectralField::zeros(target.grid()), {}, target, target, 0.0, 0.0, 0.0, 0, std::nullopt, std::nullopt};
  }
};

/// Solves Gamma z = rhs by (preconditioned) conjugate gradients to
/// ||Gamma z - rhs|| <= tol ||rhs||.  `min_rayleigh` receives the smallest
/// H^{-s}-normalized Rayleigh quotient <Gamma p, p> / ||p||_{H^{-s}}^2 seen.
SpectralField solve_gramian(const SpectralField& rhs, const GramianSpec& spec, double tol, int* iterations = nullptr,
                            double* min_rayleigh = nullptr);

/// Control samples h_m = A exp(i tau_m L) z.
ControlSignal synthesize_control(const SpectralField& z, const GramianSpec& spec);

/// exp(iTL) [u0 - i sum_m dtau exp(-i tau_m L) h_m].
SpectralField duhamel_endpoint(const SpectralField& u0, const ControlSignal& h, const GramianSpec& spec);

/// sum_m dtau (h_m, exp(i tau_m L) v0)_{L^2}
cplx control_pairing(const ControlSignal& h, const SpectralField& v0, const GramianSpec& spec);

/// Steers u0 to v_target in time T.  `continuous_refine` > 0 (odd) also
/// reports the residual with the control sampled that many times finer.
ControlResult solve_hum(const SpectralField& u0, const SpectralField& v_target, const GramianSpec& spec,
                        double cg_tol, int continuous_refine = 9);

struct ObservabilityEstimate {
  double lambda_min = 0.0;
  double residual = 0.0;  // ||C x - lambda x|| for the returned pair
  bool converged = true;
  int iterations = 0;
  std::string method;  // "dense" or "lanczos"
};

/// Smallest eigenvalue of (1 - Delta)^{s/2} Gamma (1 - Delta)^{s/2}.  Dense
/// when the retained mode count is <= dense_limit, otherwise Lanczos with
/// full reorthogonalization capped at 200 iterations.
ObservabilityEstimate estimate_observability_constant(const GramianSpec& spec, std::size_t dense_limit = 4096);

}  // namespace fraq
