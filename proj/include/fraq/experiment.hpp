#pragma once

// JSON-configured batch runs.  One config file describes one scenario; a run
// writes manifest.json, result.json and, where applicable, series.csv and
// *.state snapshots into the output directory.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraq/spectral.hpp"

namespace fraq {

inline constexpr const char* kCodeVersion = "fraq 0.1.0";

/// Initial or target state.
///   zero
///   plane:  amplitude * exp(i k.x)
///   mode:   single coefficient `amplitude` at k
///   random: complex Gaussian coefficients times (1+|k|^2)^{-decay/2},
///           rescaled so that ||u||_{H^{norm_index}} = norm; with
///           bandwidth > 0 only modes with |k_i| <= bandwidth are drawn
struct StateSpec {
  std::string kind = "zero";
  std::array<int, 2> k{1, 0};
  double amplitude = 1.0;
  double norm = 1.0;
  double norm_index = 1.0;
  double decay = 2.0;
  int bandwidth = 0;
  std::uint64_t seed_offset = 0;
};

struct ExperimentConfig {
  std::string scenario = "simulate";

  int d = 1;
  int n = 32;

  double sigma = 2.0;
  std::vector<double> P{0.0, 1.0, 1.0};
  double gauge = 0.0;
  bool check_defocusing = true;
  bool allow_linear = false;
  double r_check = 10.0;

  std::string omega = "interval:0,pi";
  /// Inner region for the cutoff phi; empty uses the damping bump itself.
  std::string omega_inner;

  double dt = 1e-3;
  double t_final = 1.0;
  double t_out = 0.0;
  int damping_sign = 1;
  double krylov_tol = 1e-12;
  bool dealias = false;
  std::uint64_t seed = 1;
  /// Decay fit window; negative means [t_final / 2, t_final].
  double fit_t_lo = -1.0;
  double fit_t_hi = -1.0;

  double control_time = 1.0;
  double s = 1.0;
  int n_quad = 64;
  double cg_tol = 1e-10;
  bool precondition = true;
  double fp_tol = 1e-6;
  int max_iter = 20;
  double smallness_radius = 5e-2;
  int substeps = 5;
  double eps_small = 4e-2;
  double t_cap = 400.0;
  double stabilization_dt = 1e-2;

  double strichartz_p = 8.0;
  double strichartz_q = 4.0;
  int trials = 16;
  double t_horizon = 1.0;

  double gcc_t0 = 2.0 * kPi;
  int gcc_dirs = 360;
  int gcc_starts = 64;

  StateSpec initial;
  StateSpec target;

  std::string output_dir = "out";
  bool snapshots = false;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Strict: unknown keys and ill-typed values raise ValidationError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

SpectralField build_state(const TorusGrid& grid, const StateSpec& spec, std::uint64_t seed);

struct RunOutcome {
  int exit_code = 0;
  nlohmann::json manifest;
  std::string error;
};

struct RunOverrides {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
};

/// Exit codes: 0 success, 2 validation error, 3 numerical failure.
/// manifest.json is written whenever validation succeeds.
RunOutcome run(const std::filesystem::path& config_path, const RunOverrides& overrides = {});
RunOutcome run(ExperimentConfig cfg);

/// Reference configurations, one per acceptance scenario.
std::vector<std::pair<std::string, ExperimentConfig>> preset_configs();
/// Writes <dir>/<name>.json for every preset; returns the written paths.
std::vector<std::filesystem::path> emit_presets(const std::filesystem::path& dir);

/// Shortest round-trip decimal representation.
std::string format_double(double x);

}  // namespace fraq
