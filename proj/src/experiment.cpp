#include "fraq/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "fraq/control_linear.hpp"
#include "fraq/control_nonlinear.hpp"
#include "fraq/dynamics.hpp"
#include "fraq/model.hpp"
#include "fraq/snapshot.hpp"
#include "fraq/strichartz.hpp"

namespace fraq {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kScenarios = {"simulate",          "stabilize",      "control-linear", "control-nonlinear",
                                          "control-global",    "strichartz",     "gcc-check"};

// ------------------------------------------------------------------ parsing

json number_or_inf(double x) { return std::isinf(x) ? json("inf") : json(x); }

class Section {
 public:
  Section(const json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    obj_ = &root.at(name_);
    if (!obj_->is_object()) throw ValidationError(name_ + " must be an object");
  }
  Section(const json* obj, std::string name) : obj_(obj), name_(std::move(name)) {}

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_ || !obj_->contains(key)) return;
    const json& v = obj_->at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (v.is_string() && (v == "inf" || v == "infinity")) {
          out = std::numeric_limits<double>::infinity();
          return;
        }
        if (!v.is_number()) throw ValidationError("");
      } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer()) throw ValidationError("");
        if constexpr (std::is_same_v<T, std::uint64_t>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) throw ValidationError("");
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ValidationError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ValidationError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw ValidationError(name_ + "." + key + " has the wrong type");
    }
  }

  void mark(const char* key) { seen_.insert(key); }

  void finish() const {
    if (!obj_) return;
    for (const auto& [k, _] : obj_->items()) {
      if (!seen_.count(k)) throw ValidationError(name_ + "." + k + " is not a recognized field");
    }
  }

 private:
  const json* obj_ = nullptr;
  std::string name_;
  std::set<std::string> seen_;
};

json state_to_json(const StateSpec& s) {
  return {{"kind", s.kind},   {"k", s.k},           {"amplitude", s.amplitude},    {"norm", s.norm},
          {"norm_index", s.norm_index}, {"decay", s.decay}, {"bandwidth", s.bandwidth}, {"seed_offset", s.seed_offset}};
}

StateSpec state_from_json(const json& root, const std::string& name) {
  StateSpec s;
  Section sec(root, name);
  sec.get("kind", s.kind);
  std::vector<int> k{s.k[0], s.k[1]};
  sec.get("k", k);
  if (k.empty() || k.size() > 2) throw ValidationError(name + ".k must have one or two entries");
  s.k = {k[0], k.size() > 1 ? k[1] : 0};
  sec.get("amplitude", s.amplitude);
  sec.get("norm", s.norm);
  sec.get("norm_index", s.norm_index);
  sec.get("decay", s.decay);
  sec.get("bandwidth", s.bandwidth);
  sec.get("seed_offset", s.seed_offset);
  sec.finish();
  return s;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void validate_state(const StateSpec& s, const std::string& name, int n) {
  static const std::set<std::string> kinds = {"zero", "plane", "mode", "random"};
  require(kinds.count(s.kind) > 0, name + ".kind must be one of zero, plane, mode, random");
  require(std::isfinite(s.amplitude), name + ".amplitude must be finite");
  if (s.kind == "plane" || s.kind == "mode") {
    for (int k : s.k) require(std::abs(k) < n / 2, name + ".k must satisfy |k_i| < n/2");
  }
  if (s.kind == "random") {
    require(s.norm >= 0.0 && std::isfinite(s.norm), name + ".norm must be finite and >= 0");
    require(std::isfinite(s.norm_index), name + ".norm_index must be finite");
    require(std::isfinite(s.decay), name + ".decay must be finite");
    require(s.bandwidth >= 0, name + ".bandwidth must be >= 0");
  }
}

// ----------------------------------------------------------------- outputs

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

  void write_json(const std::string& name, const json& j) {
    std::ofstream out(dir_ / name);
    out << j.dump(2) << "\n";
    check(out, name);
  }

  void write_states(const std::string& name, std::span<const SpectralField> fields) {
    if (fields.empty()) return;
    write_snapshot(dir_ / name, fields);
    add(name);
    add(sidecar_path(fs::path(name)).string());
  }

  void write_series(const std::string& name, std::span<const EnergyReport> reports) {
    std::ofstream out(dir_ / name);
    out << "t,mass,energy,hs_norm,dissipation_integral\n";
    for (const auto& r : reports) {
      out << format_double(r.t) << ',' << format_double(r.mass) << ',' << format_double(r.energy) << ','
          << format_double(r.hs_norm) << ',' << format_double(r.dissipation_integral) << '\n';
    }
    check(out, name);
  }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream out(dir_ / name);
    out << text;
    check(out, name);
  }

 private:
  void check(const std::ofstream& out, const std::string& name) {
    if (!out) throw ValidationError("output: cannot write " + (dir_ / name).string());
    add(name);
  }
  void add(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
  }

  fs::path dir_;
  std::vector<std::string> files_;
};

std::vector<SpectralField> signal_fields(const TorusGrid& grid, const ControlSignal& h) {
  std::vector<SpectralField> out;
  out.reserve(h.samples.size());
  for (const auto& s : h.samples) out.push_back(to_spectral(grid, s));
  return out;
}

// ------------------------------------------------------------ problem data

struct Problem {
  TorusGrid grid;
  Nonlinearity p;
  EvolutionConfig ev;
};

Problem make_problem(const ExperimentConfig& c) {
  Problem pr{TorusGrid(c.d, c.n), Nonlinearity(c.P, c.gauge), {}};
  pr.ev.sigma = c.sigma;
  pr.ev.p0_shift = pr.p.derivative_at_zero();
  pr.ev.dt = c.dt;
  pr.ev.t_final = c.t_final;
  pr.ev.t_out = c.t_out;
  pr.ev.damping_sign = c.damping_sign;
  pr.ev.krylov_tol = c.krylov_tol;
  pr.ev.dealias = c.dealias;
  pr.ev.keep_states = c.snapshots;
  return pr;
}

DampingProfile make_damping(const ExperimentConfig& c, const TorusGrid& grid) {
  const Region omega = Region::parse(c.omega);
  if (omega.is_full()) return DampingProfile::constant(grid, 1.0);
  return build_damping_profile(grid, omega);
}

CutoffProfile make_cutoff(const ExperimentConfig& c, const TorusGrid& grid) {
  const Region omega = Region::parse(c.omega);
  if (omega.is_full()) return CutoffProfile::constant(grid, 1.0);
  if (c.omega_inner.empty()) {
    auto phi = CutoffProfile::from_values(grid, build_damping_profile(grid, omega).values);
    phi.region = omega;
    return phi;
  }
  return build_cutoff_profile(grid, omega, Region::parse(c.omega_inner));
}

GramianSpec make_spec(const ExperimentConfig& c, const Problem& pr) {
  GramianSpec spec{c.control_time, SobolevIndex{c.s}, c.sigma, pr.ev.p0_shift, make_cutoff(c, pr.grid), c.n_quad,
                   c.precondition};
  spec.validate();
  return spec;
}

double support_violation(const ControlSignal& h, const std::vector<double>& mask) {
  double v = 0.0;
  for (const auto& s : h.samples)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (mask[j] == 0.0) v = std::max(v, std::abs(s[j]));
  return v;
}

// --------------------------------------------------------------- scenarios

json run_simulate(const ExperimentConfig& c, Outputs& out) {
  const Problem pr = make_problem(c);
  const SpectralField u0 = build_state(pr.grid, c.initial, c.seed);
  const Trajectory traj = integrate_undamped(u0, pr.ev, pr.p);
  double mass_drift = 0.0, energy_drift = 0.0;
  const auto& r0 = traj.reports.front();
  for (const auto& r : traj.reports) {
    mass_drift = std::max(mass_drift, std::abs(r.mass - r0.mass) / std::max(r0.mass, 1e-300));
    energy_drift = std::max(energy_drift, std::abs(r.energy - r0.energy) / std::max(std::abs(r0.energy), 1e-300));
  }
  out.write_series("series.csv", traj.reports);
  out.write_states("final.state", std::span(&traj.final_state(), 1));
  if (c.snapshots) out.write_states("states.state", traj.states);
  return {{"mass_drift", mass_drift},
          {"energy_drift", energy_drift},
          {"steps", pr.ev.step_count()},
          {"final_mass", traj.reports.back().mass},
          {"final_energy", traj.reports.back().energy}};
}

json run_stabilize(const ExperimentConfig& c, Outputs& out) {
  const Problem pr = make_problem(c);
  const DampingProfile a = make_damping(c, pr.grid);
  const SpectralField u0 = build_state(pr.grid, c.initial, c.seed);
  const Trajectory traj = integrate_damped(u0, a, pr.ev, pr.p);
  out.write_series("series.csv", traj.reports);
  out.write_states("final.state", std::span(&traj.final_state(), 1));
  if (c.snapshots) out.write_states("states.state", traj.states);

  const auto& rep = traj.reports;
  const double e0 = rep.front().energy;
  double max_increase = 0.0, identity = 0.0;
  for (std::size_t i = 0; i < rep.size(); ++i) {
    if (i > 0) max_increase = std::max(max_increase, (rep[i].energy - rep[i - 1].energy) / e0);
    identity = std::max(identity, std::abs(rep[i].energy - e0 + rep[i].dissipation_integral) / e0);
  }
  json m{{"energy_ratio", rep.back().energy / e0},
         {"max_step_increase", max_increase},
         {"energy_identity_residual", identity},
         {"steps", pr.ev.step_count()}};
  if (e0 > 0.0) {
    const double lo = c.fit_t_lo >= 0.0 ? c.fit_t_lo : 0.5 * c.t_final;
    const double hi = c.fit_t_hi >= 0.0 ? c.fit_t_hi : c.t_final;
    const DecayFit fit = fit_decay_rate(rep, lo, hi);
    m["gamma"] = fit.gamma;
    m["r_squared"] = fit.r_squared;
    m["fit_samples"] = fit.samples;
    m["fit_window"] = {lo, hi};
  }
  return m;
}

json run_control_linear(const ExperimentConfig& c, Outputs& out) {
  const Problem pr = make_problem(c);
  const GramianSpec spec = make_spec(c, pr);
  const SpectralField u0 = build_state(pr.grid, c.initial, c.seed);
  const SpectralField target = build_state(pr.grid, c.target, c.seed + 1);
  const ControlResult res = solve_hum(u0, target, spec, c.cg_tol);
  const ObservabilityEstimate obs = estimate_observability_constant(spec);

  // duality check against a random adjoint datum
  StateSpec probe;
  probe.kind = "random";
  const SpectralField v0 = build_state(pr.grid, probe, c.seed + 7);
  SpectralField reduced = u0 - free_propagate(target, -spec.t_horizon, spec.sigma, spec.p0_shift);
  reduced *= cplx(0.0, -1.0);
  const double duality = std::abs(inner(reduced, v0) - control_pairing(res.control, v0, spec));

  out.write_states("control.state", signal_fields(pr.grid, res.control));
  out.write_states("seed.state", std::span(&res.seed, 1));
  out.write_states("final.state", std::span(&res.achieved_final, 1));
  json m{{"cg_iterations", res.cg_iterations},
         {"residual_l2", res.residual_l2},
         {"residual_hs", res.residual_hs},
         {"relative_residual", res.relative_residual},
         {"duality_defect", duality},
         {"support_violation", support_violation(res.control, spec.phi.values)},
         {"lambda_min", obs.lambda_min},
         {"lambda_min_method", obs.method},
         {"lambda_min_residual", obs.residual},
         {"lambda_min_converged", obs.converged}};
  if (res.observability_estimate) m["min_rayleigh_cg"] = *res.observability_estimate;
  if (res.continuous_residual) m["continuous_residual"] = *res.continuous_residual;
  return m;
}

LocalControlOptions local_options(const ExperimentConfig& c) {
  LocalControlOptions o;
  o.fp_tol = c.fp_tol;
  o.max_iter = c.max_iter;
  o.smallness_radius = c.smallness_radius;
  o.substeps = c.substeps;
  return o;
}

json run_control_nonlinear(const ExperimentConfig& c, Outputs& out) {
  const Problem pr = make_problem(c);
  const GramianSpec spec = make_spec(c, pr);
  const SpectralField u0 = build_state(pr.grid, c.initial, c.seed);
  const SpectralField target = build_state(pr.grid, c.target, c.seed + 1);
  const LocalControlResult res = solve_local_control(u0, target, spec, pr.p, local_options(c));

  std::ostringstream hist;
  hist << "iteration,residual,relaxation,accepted\n";
  json residuals = json::array();
  for (const auto& h : res.history) {
    hist << h.iteration << ',' << format_double(h.residual) << ',' << format_double(h.relaxation) << ','
         << (h.accepted ? 1 : 0) << '\n';
    residuals.push_back(h.residual);
  }
  out.write_text("history.csv", hist.str());
  out.write_states("control.state", signal_fields(pr.grid, res.control.control));
  out.write_states("seed.state", std::span(&res.control.seed, 1));
  out.write_states("final.state", std::span(&res.control.achieved_final, 1));
  double control_hs = 0.0;
  for (const auto& f : signal_fields(pr.grid, res.control.control)) {
    control_hs = std::max(control_hs, sobolev_norm(f, spec.s));
  }
  return {{"iterations", res.history.back().iteration},
          {"fixed_point_residual", res.history.back().residual},
          {"converged", res.converged},
          {"contraction_factors", res.contraction_factors},
          {"residual_history", residuals},
          {"endpoint_residual_l2", res.control.residual_l2},
          {"endpoint_residual_hs", res.control.residual_hs},
          {"cg_iterations", res.control.cg_iterations},
          {"control_max_hs", control_hs},
          {"support_violation", support_violation(res.control.control, spec.phi.values)}};
}

json run_control_global(const ExperimentConfig& c, Outputs& out) {
  const Problem pr = make_problem(c);
  const GramianSpec spec = make_spec(c, pr);
  const DampingProfile a = make_damping(c, pr.grid);
  const SpectralField u0 = build_state(pr.grid, c.initial, c.seed);
  const SpectralField v0 = build_state(pr.grid, c.target, c.seed + 1);
  GlobalControlOptions opts;
  opts.eps_small = c.eps_small;
  opts.t_cap = c.t_cap;
  opts.stabilization_dt = c.stabilization_dt;
  opts.local = local_options(c);
  const GlobalControlPlan plan = solve_global_control(u0, v0, a, spec, pr.p, opts);

  json segments = json::array();
  double t = 0.0;
  for (const auto& seg : plan.segments) {
    const std::string name = "control_" + seg.phase + ".state";
    out.write_states(name, signal_fields(pr.grid, seg.signal));
    segments.push_back({{"phase", seg.phase},
                        {"t_start", t},
                        {"duration", seg.duration},
                        {"dt", seg.dt},
                        {"samples", seg.signal.samples.size()}});
    t += seg.duration;
  }
  out.write_states("final.state", std::span(&plan.verification.final_state, 1));
  json m{{"total_time", plan.total_time},
         {"segments", segments},
         {"phase_a_norm", plan.phase_a.achieved_norm},
         {"phase_b_norm", plan.phase_b.achieved_norm},
         {"verification_residual_l2", plan.verification.residual_l2},
         {"verification_residual_energy", plan.verification.residual_energy},
         {"reversal_residual", plan.reversal_residual},
         {"support_violation", plan.verification.support_violation}};
  if (plan.phase_c) {
    m["phase_c_iterations"] = plan.phase_c->history.back().iteration;
    m["phase_c_residual"] = plan.phase_c->history.back().residual;
  }
  if (plan.gcc) {
    m["gcc_satisfied"] = plan.gcc->satisfied;
    m["gcc_worst_entry_time"] = number_or_inf(plan.gcc->worst_entry_time);
  }
  return m;
}

json run_strichartz(const ExperimentConfig& c, Outputs&) {
  const AdmissiblePair pair = validate_pair(c.strichartz_p, c.strichartz_q, c.d);
  const StrichartzReport rep = estimate_strichartz_constant(pair, c.sigma, c.n, c.trials, c.seed, c.t_horizon);
  return {{"p", number_or_inf(pair.p)},
          {"q", number_or_inf(pair.q)},
          {"d", pair.d},
          {"sigma", rep.sigma},
          {"n", rep.n},
          {"trials", rep.trials},
          {"seed", rep.seed},
          {"t_horizon", rep.t_horizon},
          {"time_nodes", rep.time_nodes},
          {"space_nodes", rep.space_nodes},
          {"empirical_constant", rep.empirical_constant},
          {"ratios", rep.ratios}};
}

json run_gcc(const ExperimentConfig& c, Outputs&) {
  const Region omega = Region::parse(c.omega);
  const GccReport rep = check_gcc(omega, c.gcc_t0, c.gcc_dirs, c.gcc_starts);
  return {{"satisfied", rep.satisfied},
          {"t0", rep.t0},
          {"worst_entry_time", number_or_inf(rep.worst_entry_time)},
          {"witness_start", rep.witness_start},
          {"witness_direction", rep.witness_direction},
          {"n_dirs", rep.n_dirs},
          {"n_starts", rep.n_starts},
          {"region", omega.to_string()}};
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

// ------------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  require(kScenarios.count(scenario) > 0,
          "scenario must be one of simulate, stabilize, control-linear, control-nonlinear, control-global, "
          "strichartz, gcc-check");
  require(d == 1 || d == 2, "grid.d must be 1 or 2");
  require(n >= 8 && n % 2 == 0, "grid.n must be even and >= 8");
  require(sigma >= 2.0 && std::isfinite(sigma), "equation.sigma must be finite and >= 2");
  require(!P.empty(), "equation.P must be a nonempty coefficient list");
  require(gauge >= 0.0 && std::isfinite(gauge), "equation.gauge must be finite and >= 0");
  require(r_check > 0.0 && std::isfinite(r_check), "equation.r_check must be > 0");
  const Nonlinearity p(P, gauge);
  const bool dynamic = scenario == "simulate" || scenario == "stabilize" || scenario == "control-nonlinear" ||
                       scenario == "control-global";
  if (dynamic && check_defocusing) {
    const DefocusingVerdict v = validate_defocusing(p, r_check, allow_linear);
    if (!v.valid()) {
      std::string msg = "equation.P is not defocusing:";
      for (const auto& s : v.violations) msg += " " + s + ";";
      if (v.suggested_shift > 0.0) msg += " suggested equation.gauge >= " + format_double(v.suggested_shift);
      throw ValidationError(msg);
    }
  }
  require(dt > 0.0 && std::isfinite(dt), "numerics.dt must be > 0");
  require(t_final >= 0.0 && std::isfinite(t_final), "numerics.t_final must be >= 0");
  require(std::isfinite(t_out), "numerics.t_out must be finite");
  require(damping_sign == 1 || damping_sign == -1, "numerics.damping_sign must be +1 or -1");
  require(krylov_tol > 0.0 && krylov_tol <= 1e-6, "numerics.krylov_tol must lie in (0, 1e-6]");
  if (scenario == "simulate" || scenario == "stabilize") {
    EvolutionConfig ev;
    ev.dt = dt;
    ev.t_final = t_final;
    ev.step_count();
  }
  require(control_time > 0.0 && std::isfinite(control_time), "control.T must be > 0");
  require(s >= 0.5 * sigma - 1e-12, "control.s must be >= sigma/2");
  require(n_quad >= 2, "control.n_quad must be >= 2");
  require(cg_tol > 0.0 && cg_tol <= 1e-6, "control.cg_tol must lie in (0, 1e-6]");
  require(fp_tol > 0.0, "control.fp_tol must be > 0");
  require(max_iter >= 0, "control.max_iter must be >= 0");
  require(smallness_radius > 0.0, "control.smallness_radius must be > 0");
  require(substeps >= 1 && substeps % 2 == 1, "control.substeps must be a positive odd integer");
  require(eps_small > 0.0, "control.eps_small must be > 0");
  require(t_cap > 0.0, "control.t_cap must be > 0");
  require(stabilization_dt > 0.0, "control.stabilization_dt must be > 0");
  if (scenario == "stabilize" || scenario.rfind("control", 0) == 0 || scenario == "gcc-check") {
    const Region region = Region::parse(omega);
    require(region.is_full() || region.dim() == d, "regions.omega dimension does not match grid.d");
    if (scenario == "gcc-check") {
      require(!region.is_full(), "regions.omega must be a strict subset for gcc-check");
      require(gcc_t0 > 0.0, "gcc.t0 must be > 0");
      require(gcc_dirs >= 1 && gcc_starts >= 1, "gcc.n_dirs and gcc.n_starts must be >= 1");
    } else {
      require(!region.is_full() || scenario != "control-global", "regions.omega must be a strict subset for control-global");
      if (!omega_inner.empty() && !region.is_full()) {
        build_cutoff_profile(TorusGrid(d, n), region, Region::parse(omega_inner));
      }
    }
  }
  if (scenario == "strichartz") {
    validate_pair(strichartz_p, strichartz_q, d);
    require(trials >= 1, "strichartz.trials must be >= 1");
    require(t_horizon > 0.0, "strichartz.t_horizon must be > 0");
  }
  validate_state(initial, "initial", n);
  validate_state(target, "target", n);
  require(!output_dir.empty(), "output.dir must not be empty");
}

json to_json(const ExperimentConfig& c) {
  return {{"scenario", c.scenario},
          {"grid", {{"d", c.d}, {"n", c.n}}},
          {"equation",
           {{"sigma", c.sigma},
            {"P", c.P},
            {"gauge", c.gauge},
            {"check_defocusing", c.check_defocusing},
            {"allow_linear", c.allow_linear},
            {"r_check", c.r_check}}},
          {"regions", {{"omega", c.omega}, {"omega_inner", c.omega_inner}}},
          {"numerics",
           {{"dt", c.dt},
            {"t_final", c.t_final},
            {"t_out", c.t_out},
            {"damping_sign", c.damping_sign},
            {"krylov_tol", c.krylov_tol},
            {"dealias", c.dealias},
            {"seed", c.seed},
            {"fit_t_lo", c.fit_t_lo},
            {"fit_t_hi", c.fit_t_hi}}},
          {"control",
           {{"T", c.control_time},
            {"s", c.s},
            {"n_quad", c.n_quad},
            {"cg_tol", c.cg_tol},
            {"precondition", c.precondition},
            {"fp_tol", c.fp_tol},
            {"max_iter", c.max_iter},
            {"smallness_radius", c.smallness_radius},
            {"substeps", c.substeps},
            {"eps_small", c.eps_small},
            {"t_cap", c.t_cap},
            {"stabilization_dt", c.stabilization_dt}}},
          {"strichartz",
           {{"p", number_or_inf(c.strichartz_p)},
            {"q", number_or_inf(c.strichartz_q)},
            {"trials", c.trials},
            {"t_horizon", c.t_horizon}}},
          {"gcc", {{"t0", c.gcc_t0}, {"n_dirs", c.gcc_dirs}, {"n_starts", c.gcc_starts}}},
          {"initial", state_to_json(c.initial)},
          {"target", state_to_json(c.target)},
          {"output", {{"dir", c.output_dir}, {"snapshots", c.snapshots}}}};
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  ExperimentConfig c;
  Section top(&j, "config");
  top.get("scenario", c.scenario);

  Section grid(j, "grid");
  grid.get("d", c.d);
  grid.get("n", c.n);
  grid.finish();

  Section eq(j, "equation");
  eq.get("sigma", c.sigma);
  eq.get("P", c.P);
  eq.get("gauge", c.gauge);
  eq.get("check_defocusing", c.check_defocusing);
  eq.get("allow_linear", c.allow_linear);
  eq.get("r_check", c.r_check);
  eq.finish();

  Section reg(j, "regions");
  reg.get("omega", c.omega);
  reg.get("omega_inner", c.omega_inner);
  reg.finish();

  Section num(j, "numerics");
  num.get("dt", c.dt);
  num.get("t_final", c.t_final);
  num.get("t_out", c.t_out);
  num.get("damping_sign", c.damping_sign);
  num.get("krylov_tol", c.krylov_tol);
  num.get("dealias", c.dealias);
  num.get("seed", c.seed);
  num.get("fit_t_lo", c.fit_t_lo);
  num.get("fit_t_hi", c.fit_t_hi);
  num.finish();

  Section ctl(j, "control");
  ctl.get("T", c.control_time);
  ctl.get("s", c.s);
  ctl.get("n_quad", c.n_quad);
  ctl.get("cg_tol", c.cg_tol);
  ctl.get("precondition", c.precondition);
  ctl.get("fp_tol", c.fp_tol);
  ctl.get("max_iter", c.max_iter);
  ctl.get("smallness_radius", c.smallness_radius);
  ctl.get("substeps", c.substeps);
  ctl.get("eps_small", c.eps_small);
  ctl.get("t_cap", c.t_cap);
  ctl.get("stabilization_dt", c.stabilization_dt);
  ctl.finish();

  Section st(j, "strichartz");
  st.get("p", c.strichartz_p);
  st.get("q", c.strichartz_q);
  st.get("trials", c.trials);
  st.get("t_horizon", c.t_horizon);
  st.finish();

  Section gcc(j, "gcc");
  gcc.get("t0", c.gcc_t0);
  gcc.get("n_dirs", c.gcc_dirs);
  gcc.get("n_starts", c.gcc_starts);
  gcc.finish();

  c.initial = state_from_json(j, "initial");
  c.target = state_from_json(j, "target");

  Section outp(j, "output");
  outp.get("dir", c.output_dir);
  outp.get("snapshots", c.snapshots);
  outp.finish();

  for (const char* key : {"grid", "equation", "regions", "numerics", "control", "strichartz", "gcc", "initial",
                          "target", "output"}) {
    top.mark(key);
  }
  top.finish();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// ------------------------------------------------------------------- states

SpectralField build_state(const TorusGrid& grid, const StateSpec& spec, std::uint64_t seed) {
  validate_state(spec, "state", grid.n());
  if (spec.kind == "zero") return SpectralField::zeros(grid);
  if (spec.kind == "mode") return SpectralField::mode(grid, spec.k[0], spec.k[1], spec.amplitude);
  if (spec.kind == "plane") {
    NodalValues vals(grid.size());
    for (std::size_t j = 0; j < vals.size(); ++j) {
      const auto x = grid.point(j);
      vals[j] = spec.amplitude * std::polar(1.0, spec.k[0] * x[0] + (grid.dim() == 2 ? spec.k[1] * x[1] : 0.0));
    }
    return to_spectral(grid, vals);
  }
  std::mt19937_64 rng(seed + spec.seed_offset);
  std::normal_distribution<double> gauss;
  SpectralField u = SpectralField::zeros(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    if (grid.is_nyquist(i)) continue;
    const auto k = grid.mode(i);
    if (spec.bandwidth > 0 && (std::abs(k[0]) > spec.bandwidth || std::abs(k[1]) > spec.bandwidth)) continue;
    u[i] = cplx(re, im) * std::pow(1.0 + grid.k_squared(i), -0.5 * spec.decay);
  }
  const double norm = sobolev_norm(u, SobolevIndex{spec.norm_index});
  u *= spec.norm / norm;
  return u;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------- run

RunOutcome run(ExperimentConfig cfg) {
  RunOutcome outcome;
  const auto start = std::chrono::steady_clock::now();
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    outcome.exit_code = 2;
    outcome.error = e.what();
    return outcome;
  }
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    outcome.exit_code = 2;
    outcome.error = "output.dir " + dir.string() + " is not writable";
    return outcome;
  }

  Outputs out(dir);
  json metrics;
  std::string status = "ok";
  try {
    if (cfg.scenario == "simulate") metrics = run_simulate(cfg, out);
    else if (cfg.scenario == "stabilize") metrics = run_stabilize(cfg, out);
    else if (cfg.scenario == "control-linear") metrics = run_control_linear(cfg, out);
    else if (cfg.scenario == "control-nonlinear") metrics = run_control_nonlinear(cfg, out);
    else if (cfg.scenario == "control-global") metrics = run_control_global(cfg, out);
    else if (cfg.scenario == "strichartz") metrics = run_strichartz(cfg, out);
    else metrics = run_gcc(cfg, out);
    out.write_json("result.json", {{"scenario", cfg.scenario}, {"metrics", metrics}});
  } catch (const ValidationError& e) {
    outcome.exit_code = 2;
    outcome.error = e.what();
    status = "invalid";
  } catch (const NumericalError& e) {
    outcome.exit_code = 3;
    outcome.error = e.what();
    status = "numerical-failure";
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::vector<std::string> files = out.files();
  files.push_back("manifest.json");
  json manifest{{"config", to_json(cfg)},
                {"code_version", kCodeVersion},
                {"scenario", cfg.scenario},
                {"status", status},
                {"started_at", utc_now()},
                {"wall_time_s", wall},
                {"files", files},
                {"metrics", metrics.is_null() ? json::object() : metrics}};
  if (!outcome.error.empty()) manifest["error"] = outcome.error;
  out.write_json("manifest.json", manifest);
  outcome.manifest = std::move(manifest);
  return outcome;
}

RunOutcome run(const fs::path& config_path, const RunOverrides& overrides) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ValidationError& e) {
    RunOutcome o;
    o.exit_code = 2;
    o.error = e.what();
    return o;
  }
  if (overrides.output_dir) cfg.output_dir = overrides.output_dir->string();
  if (overrides.seed) cfg.seed = *overrides.seed;
  return run(std::move(cfg));
}

// ------------------------------------------------------------------ presets

std::vector<std::pair<std::string, ExperimentConfig>> preset_configs() {
  std::vector<std::pair<std::string, ExperimentConfig>> out;
  auto random_state = [](double norm) {
    StateSpec s;
    s.kind = "random";
    s.norm = norm;
    s.norm_index = 1.0;
    s.decay = 2.0;
    s.bandwidth = 4;
    return s;
  };

  ExperimentConfig sim;
  sim.scenario = "simulate";
  sim.n = 64;
  sim.dt = 1e-3;
  sim.t_final = 10.0;
  sim.t_out = 0.01;
  sim.initial = random_state(1.0);
  out.emplace_back("conservation", sim);

  ExperimentConfig plane;
  plane.scenario = "simulate";
  plane.n = 32;
  plane.P = {0.0, 0.0, 0.5};
  plane.check_defocusing = false;
  plane.dt = 1e-3;
  plane.t_final = 1.0;
  plane.t_out = 0.1;
  plane.initial.kind = "plane";
  plane.initial.k = {2, 0};
  out.emplace_back("plane-wave", plane);

  ExperimentConfig stab;
  stab.scenario = "stabilize";
  stab.n = 32;
  stab.omega = "interval:0,pi";
  stab.dt = 5e-3;
  stab.t_final = 50.0;
  stab.t_out = 0.05;
  stab.fit_t_lo = 25.0;
  stab.fit_t_hi = 50.0;
  stab.initial = random_state(1.0);
  out.emplace_back("stab-t1", stab);

  ExperimentConfig hum;
  hum.scenario = "control-linear";
  hum.n = 32;
  hum.omega = "interval:0,pi";
  hum.control_time = 1.0;
  hum.s = 1.0;
  hum.n_quad = 64;
  hum.cg_tol = 1e-10;
  hum.initial = random_state(1.0);
  out.emplace_back("hum-bump", hum);

  ExperimentConfig closed = hum;
  closed.omega = "full";
  out.emplace_back("hum-closed-form", closed);

  ExperimentConfig local;
  local.scenario = "control-nonlinear";
  local.n = 32;
  local.omega = "interval:0,pi";
  local.control_time = 1.0;
  local.s = 1.0;
  local.n_quad = 64;
  local.fp_tol = 1e-6;
  local.max_iter = 20;
  local.initial = random_state(1e-2);
  out.emplace_back("local-control", local);

  ExperimentConfig global = local;
  global.scenario = "control-global";
  global.fp_tol = 1e-10;
  global.max_iter = 40;
  global.initial = random_state(1.0);
  global.target = random_state(1.0);
  out.emplace_back("global-control", global);

  ExperimentConfig stri;
  stri.scenario = "strichartz";
  stri.n = 64;
  stri.strichartz_p = 8.0;
  stri.strichartz_q = 4.0;
  stri.trials = 16;
  stri.t_horizon = 1.0;
  out.emplace_back("strichartz-841", stri);

  ExperimentConfig gcc1;
  gcc1.scenario = "gcc-check";
  gcc1.omega = "interval:0,pi";
  gcc1.gcc_t0 = 2.0 * kPi;
  gcc1.gcc_dirs = 2;
  gcc1.gcc_starts = 64;
  out.emplace_back("gcc-interval", gcc1);

  ExperimentConfig strip = gcc1;
  strip.d = 2;
  strip.omega = "box:0,1,0,2pi";
  strip.gcc_dirs = 360;
  strip.gcc_starts = 64;
  out.emplace_back("gcc-strip", strip);

  ExperimentConfig ballc = strip;
  ballc.omega = "complement:ball:pi,pi,0.5";
  ballc.gcc_t0 = 2.0;
  out.emplace_back("gcc-ball-complement", ballc);

  for (auto& [name, cfg] : out) cfg.output_dir = "runs/" + name;
  return out;
}

std::vector<fs::path> emit_presets(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ValidationError("presets: cannot create " + dir.string());
  std::vector<fs::path> written;
  for (const auto& [name, cfg] : preset_configs()) {
    const fs::path path = dir / (name + ".json");
    std::ofstream out(path);
    out << to_json(cfg).dump(2) << "\n";
    if (!out) throw ValidationError("presets: cannot write " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace fraq
