#include "fraq/control_nonlinear.hpp"

#include <cmath>
#include <sstream>

namespace fraq {

namespace {

EvolutionConfig lattice_config(const GramianSpec& spec, int substeps) {
  if (substeps < 1 || substeps % 2 == 0) throw ValidationError("control.substeps must be a positive odd integer");
  EvolutionConfig cfg;
  cfg.sigma = spec.sigma;
  cfg.p0_shift = spec.p0_shift;
  cfg.dt = spec.quad_step() / substeps;
  cfg.t_final = spec.t_horizon;
  cfg.t_out = spec.t_horizon;
  cfg.keep_states = false;
  return cfg;
}

void check_shift(const GramianSpec& spec, const Nonlinearity& p) {
  const double d0 = p.derivative_at_zero();
  if (std::abs(spec.p0_shift - d0) > 1e-12 * std::max(1.0, std::abs(d0))) {
    throw ValidationError("control: p0_shift must equal P'(0) (including the gauge)");
  }
}

template <class F>
auto tagged(const char* phase, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(phase) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(phase) + ": " + e.what());
  }
}

}  // namespace

// ------------------------------------------------------------ local control

SpectralField backward_initial_state(const SpectralField& phi0, const SpectralField& target, const GramianSpec& spec,
                                     const Nonlinearity& p, int substeps) {
  const EvolutionConfig cfg = lattice_config(spec, substeps);
  const ControlSignal reversed = time_reversed(synthesize_control(phi0, spec));
  const auto traj = integrate_undamped(conjugate(target), cfg, p, &reversed);
  return conjugate(traj.final_state());
}

LocalControlResult solve_local_control(const SpectralField& u0, const SpectralField& v_target,
                                       const GramianSpec& spec, const Nonlinearity& p,
                                       const LocalControlOptions& opts) {
  spec.validate();
  check_shift(spec, p);
  if (!(opts.fp_tol > 0.0)) throw ValidationError("control.fp_tol must be > 0");
  if (opts.max_iter < 0) throw ValidationError("control.max_iter must be >= 0");
  if (!(opts.relaxation > 0.0 && opts.relaxation <= 1.0)) throw ValidationError("control.relaxation must lie in (0, 1]");
  const double n0 = sobolev_norm(u0, spec.s);
  const double n1 = sobolev_norm(v_target, spec.s);
  if (n0 > opts.smallness_radius || n1 > opts.smallness_radius) {
    std::ostringstream os;
    os << "control: endpoint norms " << n0 << ", " << n1 << " exceed smallness_radius " << opts.smallness_radius;
    throw ValidationError(os.str());
  }

  const auto& grid = u0.grid();
  auto backward = [&](const SpectralField& phi) {
    return backward_initial_state(phi, v_target, spec, p, opts.substeps);
  };
  auto residual_of = [&](const SpectralField& reached) { return sobolev_norm(u0 - reached, spec.s); };

  LocalControlResult out{ControlResult::empty(v_target), {}, false, {}};
  SpectralField phi = SpectralField::zeros(grid);
  SpectralField reached = backward(phi);
  double res = residual_of(reached);
  double omega = opts.relaxation;
  out.history.push_back({phi, reached, res, 0, omega, true});

  int it = 0;
  int growth = 0;
  int cg_total = 0;
  while (res > opts.fp_tol) {
    if (it >= opts.max_iter) {
      std::ostringstream os;
      os << "local control: max_iter " << opts.max_iter << " exceeded (residual " << res << ")";
      throw NumericalError(os.str());
    }
    ++it;
    SpectralField rhs = u0 - reached;
    rhs *= cplx(0.0, -1.0);
    int cg_it = 0;
    const SpectralField step = solve_gramian(rhs, spec, opts.cg_tol, &cg_it);
    cg_total += cg_it;
    SpectralField candidate = phi;
    candidate.axpy(omega, step);
    SpectralField cand_reached = backward(candidate);
    const double cand_res = residual_of(cand_reached);
    if (cand_res < res) {
      out.contraction_factors.push_back(cand_res / res);
      phi = std::move(candidate);
      reached = std::move(cand_reached);
      res = cand_res;
      growth = 0;
      out.history.push_back({phi, reached, res, it, omega, true});
    } else {
      out.history.push_back({candidate, cand_reached, cand_res, it, omega, false});
      if (++growth >= 2) {
        std::ostringstream os;
        os << "local control diverged: residual grew twice in a row (" << res << " -> " << cand_res << ")";
        throw NumericalError(os.str());
      }
      omega *= 0.5;
    }
  }
  out.converged = true;

  ControlResult& cr = out.control;
  cr.seed = phi;
  cr.control = synthesize_control(phi, spec);
  cr.cg_iterations = cg_total;
  const EvolutionConfig cfg = lattice_config(spec, opts.substeps);
  cr.achieved_final = integrate_undamped(u0, cfg, p, &cr.control).final_state();
  const SpectralField diff = cr.achieved_final - v_target;
  cr.residual_l2 = diff.norm_l2();
  cr.residual_hs = sobolev_norm(diff, spec.s);
  const double scale = (u0 - free_propagate(v_target, -spec.t_horizon, spec.sigma, spec.p0_shift)).norm_l2();
  cr.relative_residual = scale > 0.0 ? cr.residual_l2 / scale : cr.residual_l2;
  return out;
}

// -------------------------------------------------------------- stabilizing

StabilizationResult stabilize_to_ball(const SpectralField& u0, const DampingProfile& a, double eps_small,
                                      const EvolutionConfig& cfg, const Nonlinearity& p, double t_cap) {
  cfg.validate();
  if (!(eps_small > 0.0)) throw ValidationError("control.eps_small must be > 0");
  if (!(t_cap >= 0.0)) throw ValidationError("control.t_cap must be >= 0");
  if (!(a.grid == u0.grid())) throw ValidationError("damping profile and state live on different grids");
  const SobolevIndex energy{0.5 * cfg.sigma};

  StabilizationResult out{u0, 0.0, sobolev_norm(u0, energy), ControlSignal{cfg.dt, {}}};
  if (out.achieved_norm <= eps_small) return out;

  const DampedField field(a, cfg, p);
  const SplitStepper stepper(u0.grid(), cfg.sigma, cfg.p0_shift, p, cfg.dt);
  const std::size_t cap = std::size_t(std::ceil(t_cap / cfg.dt - 1e-9));
  SpectralField u = u0;
  for (std::size_t j = 0; j < cap; ++j) {
    stepper.half_linear(u);
    stepper.half_nonlinear(u);
    const NodalValues h1 = field.feedback_forcing(u);
    SpectralField mid = u;
    stepper.kick(mid, h1, 0.5 * cfg.dt);
    NodalValues h = field.feedback_forcing(mid);
    stepper.kick(u, h, cfg.dt);
    stepper.half_nonlinear(u);
    stepper.half_linear(u);
    out.forcing.samples.push_back(std::move(h));

    const double t = double(j + 1) * cfg.dt;
    if (!u.all_finite()) {
      std::ostringstream os;
      os << "stabilization: non-finite state at t = " << t;
      throw NumericalError(os.str());
    }
    const double norm = sobolev_norm(u, energy);
    if (norm <= eps_small) {
      out.small_state = std::move(u);
      out.t_reached = t;
      out.achieved_norm = norm;
      return out;
    }
    out.achieved_norm = norm;
  }
  std::ostringstream os;
  os << "stabilization: time cap " << t_cap << " reached with ||u||_{H^" << energy.value
     << "} = " << out.achieved_norm << " > " << eps_small;
  throw NumericalError(os.str());
}

// ------------------------------------------------------------- verification

VerificationReport verify_control(const SpectralField& u0, std::span<const ControlSegment> segments,
                                  const SpectralField& v_target, const EvolutionConfig& cfg, const Nonlinearity& p,
                                  const std::vector<bool>* allowed) {
  if (allowed && allowed->size() != u0.grid().size()) throw ValidationError("support mask size does not match grid");
  VerificationReport rep{u0};
  SpectralField u = u0;
  for (const auto& seg : segments) {
    if (seg.signal.duration() > seg.duration * (1.0 + 1e-12) + 1e-12) {
      throw ValidationError("segment " + seg.phase + ": control outlasts the segment");
    }
    if (allowed) {
      for (const auto& sample : seg.signal.samples) {
        for (std::size_t j = 0; j < sample.size(); ++j) {
          if (!(*allowed)[j]) rep.support_violation = std::max(rep.support_violation, std::abs(sample[j]));
        }
      }
    }
    if (seg.duration <= 0.0) continue;
    EvolutionConfig c = cfg;
    c.dt = seg.dt;
    c.t_final = seg.duration;
    c.t_out = seg.duration;
    c.keep_states = false;
    u = integrate_undamped(u, c, p, seg.signal.empty() ? nullptr : &seg.signal).final_state();
  }
  const SpectralField diff = u - v_target;
  rep.residual_l2 = diff.norm_l2();
  rep.residual_energy = sobolev_norm(diff, SobolevIndex{0.5 * cfg.sigma});
  rep.final_state = std::move(u);
  return rep;
}

// ------------------------------------------------------------ global control

GlobalControlPlan solve_global_control(const SpectralField& u0, const SpectralField& v0, const DampingProfile& a,
                                       const GramianSpec& spec, const Nonlinearity& p,
                                       const GlobalControlOptions& opts) {
  spec.validate();
  check_shift(spec, p);
  if (!(u0.grid() == spec.grid()) || !(v0.grid() == spec.grid()) || !(a.grid == spec.grid())) {
    throw ValidationError("global control: states and profiles live on different grids");
  }
  const auto& grid = u0.grid();
  EvolutionConfig cfg;
  cfg.sigma = spec.sigma;
  cfg.p0_shift = spec.p0_shift;
  cfg.dt = opts.stabilization_dt;
  cfg.validate();

  GlobalControlPlan plan{StabilizationResult{u0, 0.0, 0.0, {cfg.dt, {}}},
                         StabilizationResult{conjugate(v0), 0.0, 0.0, {cfg.dt, {}}},
                         std::nullopt,
                         {},
                         0.0,
                         VerificationReport{u0},
                         0.0,
                         std::nullopt,
                         {}};
  plan.allowed.resize(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) plan.allowed[j] = a.values[j] != 0.0 || spec.phi.values[j] != 0.0;
  if (a.omega && !a.omega->is_full()) {
    const int dirs = grid.dim() == 1 ? 2 : 360;
    plan.gcc = check_gcc(*a.omega, std::max(opts.t_cap, spec.t_horizon), dirs, 64);
  }
  if (u0.is_zero() && v0.is_zero()) return plan;

  plan.phase_a = tagged("phase A", [&] { return stabilize_to_ball(u0, a, opts.eps_small, cfg, p, opts.t_cap); });
  plan.phase_b =
      tagged("phase B", [&] { return stabilize_to_ball(conjugate(v0), a, opts.eps_small, cfg, p, opts.t_cap); });
  const SpectralField joint = conjugate(plan.phase_b.small_state);
  plan.phase_c = tagged(
      "phase C", [&] { return solve_local_control(plan.phase_a.small_state, joint, spec, p, opts.local); });

  const ControlSignal reversed = time_reversed(plan.phase_b.forcing);
  plan.segments.push_back({"A", cfg.dt, plan.phase_a.t_reached, plan.phase_a.forcing});
  plan.segments.push_back({"C", spec.quad_step() / opts.local.substeps, spec.t_horizon, plan.phase_c->control.control});
  plan.segments.push_back({"B", cfg.dt, plan.phase_b.t_reached, reversed});
  plan.total_time = plan.phase_a.t_reached + spec.t_horizon + plan.phase_b.t_reached;

  const ControlSegment tail[] = {plan.segments.back()};
  plan.reversal_residual = verify_control(joint, tail, v0, cfg, p).residual_l2;
  plan.verification = tagged("verification", [&] { return verify_control(u0, plan.segments, v0, cfg, p, &plan.allowed); });
  return plan;
}

}  // namespace fraq
