#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fraq/experiment.hpp"
#include "fraq/snapshot.hpp"

using namespace fraq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fraq_experiment_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig small_simulation(const fs::path& out) {
  ExperimentConfig c;
  c.scenario = "simulate";
  c.d = 1;
  c.n = 32;
  c.sigma = 2.0;
  c.P = {0.0, 1.0, 1.0};
  c.dt = 1e-3;
  c.t_final = 1.0;
  c.t_out = 0.1;
  c.initial.kind = "random";
  c.initial.bandwidth = 4;
  c.output_dir = out.string();
  return c;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) {
  std::ifstream is(p);
  return json::parse(is);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FRAQCTL_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config survives a json round trip") {
  for (const auto& [name, cfg] : preset_configs()) {
    const json j = to_json(cfg);
    CHECK(to_json(config_from_json(j)) == j);
  }
}

TEST_CASE("unknown or ill-typed keys are rejected") {
  json j = to_json(ExperimentConfig{});
  j["numerics"]["dtt"] = 1e-3;
  CHECK_THROWS_AS(config_from_json(j), ValidationError);
  j = to_json(ExperimentConfig{});
  j["grid"]["n"] = "thirty-two";
  CHECK_THROWS_AS(config_from_json(j), ValidationError);
  j = to_json(ExperimentConfig{});
  j["extra"] = 1;
  CHECK_THROWS_AS(config_from_json(j), ValidationError);
}

TEST_CASE("validation names the offending field") {
  const fs::path dir = scratch("invalid");
  ExperimentConfig c = small_simulation(dir / "out");
  c.n = 33;
  const auto outcome = run(c);
  CHECK(outcome.exit_code == 2);
  CHECK(outcome.error.find("grid.n") != std::string::npos);

  c = small_simulation(dir / "out");
  c.dt = -1.0;
  const auto neg = run(c);
  CHECK(neg.exit_code == 2);
  CHECK(neg.error.find("numerics.dt") != std::string::npos);
}

TEST_CASE("small simulation conserves mass and writes its outputs") {
  const fs::path dir = scratch("simulate");
  const auto outcome = run(small_simulation(dir));
  REQUIRE(outcome.exit_code == 0);
  CHECK(outcome.manifest.at("status") == "ok");
  CHECK(outcome.manifest.at("metrics").at("mass_drift").get<double>() <= 1e-12);
  for (const char* f : {"manifest.json", "result.json", "series.csv", "final.state"}) CHECK(fs::exists(dir / f));

  std::ifstream csv(dir / "series.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,mass,energy,hs_norm,dissipation_integral");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 11);

  const auto final_state = read_snapshot(dir / "final.state");
  REQUIRE(final_state.size() == 1);
  CHECK(final_state[0].grid() == TorusGrid(1, 32));
  CHECK(read_json(dir / "result.json").at("scenario") == "simulate");
}

TEST_CASE("runs are deterministic") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  ExperimentConfig ca = small_simulation(a), cb = small_simulation(b);
  REQUIRE(run(ca).exit_code == 0);
  REQUIRE(run(cb).exit_code == 0);
  json ma = read_json(a / "manifest.json"), mb = read_json(b / "manifest.json");
  for (auto* m : {&ma, &mb}) {
    m->erase("started_at");
    m->erase("wall_time_s");
    (*m)["config"]["output"].erase("dir");
  }
  CHECK(ma == mb);
  CHECK(slurp(a / "series.csv") == slurp(b / "series.csv"));
  CHECK(slurp(a / "final.state") == slurp(b / "final.state"));
}

TEST_CASE("seed override changes random data") {
  const fs::path dir = scratch("seed");
  const fs::path cfg = write_config(dir, to_json(small_simulation(dir / "x")));
  const auto one = run(cfg, {dir / "one", std::uint64_t{1}});
  const auto two = run(cfg, {dir / "two", std::uint64_t{2}});
  REQUIRE(one.exit_code == 0);
  REQUIRE(two.exit_code == 0);
  CHECK(fs::exists(dir / "one" / "manifest.json"));
  CHECK(slurp(dir / "one" / "final.state") != slurp(dir / "two" / "final.state"));
}

TEST_CASE("presets cover the reference scenarios") {
  const auto presets = preset_configs();
  CHECK(presets.size() >= 7);
  bool stab = false, closed = false;
  for (const auto& [name, cfg] : presets) {
    CHECK_NOTHROW(cfg.validate());
    if (name == "stab-t1") stab = cfg.scenario == "stabilize";
    if (name == "hum-closed-form") closed = cfg.omega == "full";
  }
  CHECK(stab);
  CHECK(closed);
  const fs::path dir = scratch("presets");
  const auto written = emit_presets(dir);
  CHECK(written.size() == presets.size());
  for (const auto& p : written) CHECK_NOTHROW(load_config(p));
}

TEST_CASE("gcc scenario reports a verdict") {
  const fs::path dir = scratch("gcc");
  for (const auto& [name, cfg] : preset_configs()) {
    if (name != "gcc-interval") continue;
    ExperimentConfig c = cfg;
    c.output_dir = dir.string();
    const auto outcome = run(c);
    REQUIRE(outcome.exit_code == 0);
    CHECK(outcome.manifest.at("metrics").at("satisfied") == true);
  }
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");
  ExperimentConfig c = small_simulation(dir / "ok");
  c.t_final = 0.1;
  CHECK(run_cli("run " + write_config(dir, to_json(c)).string()) == 0);
  CHECK(fs::exists(dir / "ok" / "manifest.json"));

  json bad = to_json(c);
  bad["grid"]["n"] = 33;
  CHECK(run_cli("run " + write_config(dir, bad).string()) == 2);
  CHECK(run_cli("run " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("presets --out " + (dir / "presets").string()) == 0);
  CHECK(fs::exists(dir / "presets" / "stab-t1.json"));
}

TEST_CASE("doubles print in shortest round trip form") {
  for (double x : {0.1, 1e-3, 2.0 * kPi, 1.0 / 3.0, 5e-324, 1e300}) {
    const std::string s = format_double(x);
    CHECK(std::strtod(s.c_str(), nullptr) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-3) == "0.001");
}
