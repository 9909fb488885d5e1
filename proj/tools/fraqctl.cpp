#include <CLI11.hpp>
#include <iostream>

#include "fraq/errors.hpp"
#include "fraq/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral simulation and control synthesis for fractional NLS on flat tori"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  run->add_option("config", config, "Config file")->required();
  auto* out_opt = run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  auto* seed_opt = run->add_option("--seed", seed, "Random seed (overrides numerics.seed)");

  std::string preset_dir;
  auto* presets = app.add_subcommand("presets", "Write the reference configs");
  presets->add_option("--out", preset_dir, "Directory to write into")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*presets) {
    try {
      for (const auto& p : fraq::emit_presets(preset_dir)) std::cout << p.string() << "\n";
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "fraqctl: " << e.what() << "\n";
      return 2;
    }
  }

  fraq::RunOverrides ov;
  if (*out_opt) ov.output_dir = out_dir;
  if (*seed_opt) ov.seed = seed;
  try {
    const auto outcome = fraq::run(config, ov);
    if (outcome.exit_code != 0) {
      std::cerr << "fraqctl: " << outcome.error << "\n";
    } else {
      std::cout << outcome.manifest["metrics"].dump(2) << "\n";
    }
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "fraqctl: " << e.what() << "\n";
    return 1;
  }
}
