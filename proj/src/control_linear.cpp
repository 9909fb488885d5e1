#include "fraq/control_linear.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>

namespace fraq {

namespace {

constexpr double kSingularRayleigh = 1e-14;
constexpr int kLanczosCap = 200;

// Symbol |k|^sigma + p0 and the per-node propagators exp(i tau_m L).
struct LinearFlow {
  std::vector<double> generator;
  std::vector<std::vector<cplx>> forward;  // one per quadrature node

  explicit LinearFlow(const GramianSpec& spec) {
    const auto lambda = Multiplier::fractional_laplacian(spec.grid(), spec.sigma);
    auto sym = lambda.symbol();
    generator.assign(sym.begin(), sym.end());
    for (auto& g : generator) g += spec.p0_shift;
    forward.resize(spec.n_quad);
    for (int m = 0; m < spec.n_quad; ++m) forward[m] = phases(spec.node(m));
  }

  std::vector<cplx> phases(double t) const {
    std::vector<cplx> e(generator.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::polar(1.0, t * generator[i]);
    return e;
  }
};

SpectralField times(const SpectralField& u, const std::vector<cplx>& e, bool conj = false) {
  SpectralField out = u;
  for (std::size_t i = 0; i < e.size(); ++i) out[i] *= conj ? std::conj(e[i]) : e[i];
  return out;
}

SpectralField gramian(const SpectralField& v, const GramianSpec& spec, const LinearFlow& flow) {
  SpectralField acc = SpectralField::zeros(v.grid());
  const double w = spec.quad_step();
  for (int m = 0; m < spec.n_quad; ++m) {
    const SpectralField av = apply_control_operator(times(v, flow.forward[m]), spec.phi, spec.s);
    acc.axpy(w, times(av, flow.forward[m], true));
  }
  return acc;
}

void check_grid(const SpectralField& u, const GramianSpec& spec, const char* what) {
  if (!(u.grid() == spec.grid())) {
    throw ValidationError(std::string(what) + " and the cutoff profile live on different grids");
  }
}

}  // namespace

void GramianSpec::validate() const {
  if (!(t_horizon > 0.0) || !std::isfinite(t_horizon)) throw ValidationError("control.T must be > 0");
  if (n_quad < 2) throw ValidationError("control.n_quad must be >= 2");
  if (!(sigma >= 2.0)) throw ValidationError("equation.sigma must be >= 2");
  if (!(s.value >= 0.5 * sigma - 1e-12)) throw ValidationError("control.s must be >= sigma/2");
  if (!std::isfinite(p0_shift)) throw ValidationError("p0_shift must be finite");
}

// ------------------------------------------------------------------ operators

NodalValues apply_control_operator_nodal(const SpectralField& v, const CutoffProfile& phi, SobolevIndex s) {
  if (!(v.grid() == phi.grid)) throw ValidationError("field and cutoff profile live on different grids");
  NodalValues vals = to_physical(v);
  for (std::size_t j = 0; j < vals.size(); ++j) vals[j] *= phi.values[j];
  SpectralField g = to_spectral(v.grid(), vals);
  apply_in_place(Multiplier::bessel(v.grid(), -2.0 * s.value), g);
  vals = to_physical(g);
  for (std::size_t j = 0; j < vals.size(); ++j) vals[j] *= phi.values[j];
  return vals;
}

SpectralField apply_control_operator(const SpectralField& v, const CutoffProfile& phi, SobolevIndex s) {
  return to_spectral(v.grid(), apply_control_operator_nodal(v, phi, s));
}

SpectralField apply_gramian(const SpectralField& v0, const GramianSpec& spec) {
  spec.validate();
  check_grid(v0, spec, "state");
  return gramian(v0, spec, LinearFlow(spec));
}

// ------------------------------------------------------------------------ CG

SpectralField solve_gramian(const SpectralField& rhs, const GramianSpec& spec, double tol, int* iterations,
                            double* min_rayleigh) {
  spec.validate();
  check_grid(rhs, spec, "right-hand side");
  if (!(tol > 0.0 && tol <= 1e-6)) throw ValidationError("control.cg_tol must lie in (0, 1e-6]");
  const LinearFlow flow(spec);
  const auto& grid = rhs.grid();
  const Multiplier precond = Multiplier::bessel(grid, 2.0 * spec.s.value);
  const Multiplier weak = Multiplier::bessel(grid, -spec.s.value);
  auto prec = [&](const SpectralField& r) { return spec.precondition ? apply(precond, r) : r; };

  const double rhs_norm = rhs.norm_l2();
  SpectralField z = SpectralField::zeros(grid);
  if (iterations) *iterations = 0;
  if (rhs_norm == 0.0) return z;

  const int cap = 10 * int(grid.retained_count());
  SpectralField r = rhs;
  SpectralField y = prec(r);
  SpectralField p = y;
  double ry = std::real(inner(r, y));
  double lowest = std::numeric_limits<double>::infinity();
  int it = 0;
  while (r.norm_l2() > tol * rhs_norm) {
    if (it >= cap) {
      std::ostringstream os;
      os << "gramian CG stagnated after " << it << " iterations (relative residual " << r.norm_l2() / rhs_norm
         << ")";
      throw NumericalError(os.str());
    }
    const SpectralField gp = gramian(p, spec, flow);
    const double pgp = std::real(inner(gp, p));
    const double hs = apply(weak, p).norm_l2();
    const double rq = pgp / (hs * hs);
    lowest = std::min(lowest, rq);
    if (!(rq > kSingularRayleigh)) {
      std::ostringstream os;
      os << "gramian numerically singular (Rayleigh quotient " << rq << ")";
      throw NumericalError(os.str());
    }
    const double alpha = ry / pgp;
    z.axpy(alpha, p);
    r.axpy(-alpha, gp);
    y = prec(r);
    const double ry_new = std::real(inner(r, y));
    p *= ry_new / ry;
    p += y;
    ry = ry_new;
    ++it;
  }
  if (iterations) *iterations = it;
  if (min_rayleigh && std::isfinite(lowest)) *min_rayleigh = lowest;
  return z;
}

// ---------------------------------------------------------------- synthesis

ControlSignal synthesize_control(const SpectralField& z, const GramianSpec& spec) {
  spec.validate();
  check_grid(z, spec, "seed");
  const LinearFlow flow(spec);
  ControlSignal h;
  h.interval = spec.quad_step();
  h.samples.reserve(spec.n_quad);
  for (int m = 0; m < spec.n_quad; ++m) {
    h.samples.push_back(apply_control_operator_nodal(times(z, flow.forward[m]), spec.phi, spec.s));
  }
  return h;
}

SpectralField duhamel_endpoint(const SpectralField& u0, const ControlSignal& h, const GramianSpec& spec) {
  spec.validate();
  check_grid(u0, spec, "state");
  if (!h.empty() && int(h.samples.size()) != spec.n_quad) {
    throw ValidationError("control sample count does not match control.n_quad");
  }
  const LinearFlow flow(spec);
  SpectralField acc = u0;
  for (std::size_t m = 0; m < h.samples.size(); ++m) {
    const SpectralField hm = to_spectral(u0.grid(), h.samples[m]);
    acc.axpy(cplx(0.0, -spec.quad_step()), times(hm, flow.forward[m], true));
  }
  return times(acc, flow.phases(spec.t_horizon));
}

cplx control_pairing(const ControlSignal& h, const SpectralField& v0, const GramianSpec& spec) {
  spec.validate();
  check_grid(v0, spec, "state");
  const LinearFlow flow(spec);
  cplx acc = 0.0;
  for (std::size_t m = 0; m < h.samples.size(); ++m) {
    acc += spec.quad_step() * inner(to_spectral(v0.grid(), h.samples[m]), times(v0, flow.forward[m]));
  }
  return acc;
}

ControlResult solve_hum(const SpectralField& u0, const SpectralField& v_target, const GramianSpec& spec,
                        double cg_tol, int continuous_refine) {
  spec.validate();
  check_grid(u0, spec, "initial state");
  check_grid(v_target, spec, "target state");
  if (continuous_refine < 0 || (continuous_refine > 0 && continuous_refine % 2 == 0)) {
    throw ValidationError("continuous refinement factor must be odd");
  }
  const LinearFlow flow(spec);
  // null control of u0 - exp(-iTL) v_target
  SpectralField reduced = u0;
  reduced -= times(v_target, flow.phases(spec.t_horizon), true);
  SpectralField rhs = reduced;
  rhs *= cplx(0.0, -1.0);

  ControlResult res = ControlResult::empty(v_target);
  double lowest = std::numeric_limits<double>::quiet_NaN();
  res.seed = solve_gramian(rhs, spec, cg_tol, &res.cg_iterations, &lowest);
  if (std::isfinite(lowest)) res.observability_estimate = lowest;
  res.control = synthesize_control(res.seed, spec);
  res.achieved_final = duhamel_endpoint(u0, res.control, spec);

  const SpectralField diff = res.achieved_final - v_target;
  res.residual_l2 = diff.norm_l2();
  res.residual_hs = sobolev_norm(diff, spec.s);
  const double scale = reduced.norm_l2();
  res.relative_residual = scale > 0.0 ? res.residual_l2 / scale : res.residual_l2;

  if (continuous_refine > 0 && !res.seed.is_zero()) {
    GramianSpec fine = spec;
    fine.n_quad = spec.n_quad * continuous_refine;
    const ControlSignal h = synthesize_control(res.seed, fine);
    EvolutionConfig cfg;
    cfg.sigma = spec.sigma;
    cfg.p0_shift = spec.p0_shift;
    cfg.dt = fine.quad_step();
    cfg.t_final = spec.t_horizon;
    cfg.t_out = spec.t_horizon;
    cfg.keep_states = false;
    const Nonlinearity linear({0.0, spec.p0_shift});
    const auto traj = integrate_undamped(u0, cfg, linear, &h);
    res.continuous_residual = (traj.final_state() - v_target).norm_l2();
  } else if (continuous_refine > 0) {
    res.continuous_residual = res.residual_l2;
  }
  return res;
}

// ------------------------------------------------------------ observability

ObservabilityEstimate estimate_observability_constant(const GramianSpec& spec, std::size_t dense_limit) {
  spec.validate();
  const auto& grid = spec.grid();
  const LinearFlow flow(spec);
  const Multiplier half = Multiplier::bessel(grid, spec.s.value);
  std::vector<std::size_t> modes;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.is_nyquist(i)) modes.push_back(i);
  }
  const auto nm = Eigen::Index(modes.size());
  auto to_field = [&](const Eigen::VectorXcd& x) {
    SpectralField f = SpectralField::zeros(grid);
    for (Eigen::Index j = 0; j < nm; ++j) f[modes[j]] = x(j);
    return f;
  };
  auto from_field = [&](const SpectralField& f) {
    Eigen::VectorXcd x(nm);
    for (Eigen::Index j = 0; j < nm; ++j) x(j) = f[modes[j]];
    return x;
  };
  auto conjugated = [&](const Eigen::VectorXcd& x) {
    return from_field(apply(half, gramian(apply(half, to_field(x)), spec, flow)));
  };

  ObservabilityEstimate est;
  if (modes.size() <= dense_limit) {
    est.method = "dense";
    Eigen::MatrixXcd c(nm, nm);
    for (Eigen::Index j = 0; j < nm; ++j) c.col(j) = conjugated(Eigen::VectorXcd::Unit(nm, j));
    const Eigen::MatrixXcd herm = 0.5 * (c + c.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm);
    if (eig.info() != Eigen::Success) throw NumericalError("observability: dense eigen-solve failed");
    est.lambda_min = eig.eigenvalues()(0);
    const Eigen::VectorXcd x = eig.eigenvectors().col(0);
    est.residual = (c * x - est.lambda_min * x).norm();
    est.iterations = int(nm);
    return est;
  }

  est.method = "lanczos";
  const int cap = int(std::min<Eigen::Index>(kLanczosCap, nm));
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> gauss;
  Eigen::VectorXcd q(nm);
  for (Eigen::Index j = 0; j < nm; ++j) q(j) = cplx(gauss(rng), gauss(rng));
  q.normalize();
  Eigen::MatrixXcd basis(nm, cap);
  std::vector<double> alpha, beta;
  Eigen::VectorXd ritz;
  double lambda = 0.0, residual = 0.0;
  for (int k = 0; k < cap; ++k) {
    basis.col(k) = q;
    Eigen::VectorXcd w = conjugated(q);
    alpha.push_back(std::real(q.dot(w)));
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).adjoint() * w);
    }
    const double b = w.norm();
    const int m = k + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) t(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri(t);
    lambda = tri.eigenvalues()(0);
    residual = b * std::abs(tri.eigenvectors()(m - 1, 0));
    est.iterations = m;
    if (residual <= 1e-10 * std::max(1.0, std::abs(lambda)) || b < 1e-14) break;
    beta.push_back(b);
    q = w / b;
  }
  est.lambda_min = lambda;
  est.residual = residual;
  est.converged = residual <= 1e-8 * std::max(1.0, std::abs(lambda));
  return est;
}

}  // namespace fraq
