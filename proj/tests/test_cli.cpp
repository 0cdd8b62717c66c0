#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "coopsched/coopsched.hpp"
#include "synthetic_dataset.hpp"

using namespace coopsched;
namespace fs = std::filesystem;

namespace {

const std::string kConfigText =
    "robots = 3\n"
    "duration = 5\n"
    "seed = 7\n"
    "(0,5] = 1 2 3\n";

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "coopsched_cli" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs the installed binary with the given argument string, capturing exit
/// code, stdout, and stderr.
CliResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out_file = scratch / "stdout.txt";
  const fs::path err_file = scratch / "stderr.txt";
  const std::string cmd = std::string("\"") + COOPSCHED_CLI_PATH + "\" " +
                          args + " > \"" + out_file.string() + "\" 2> \"" +
                          err_file.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += (c == '\n');
  return n;
}

}  // namespace

TEST_CASE("simulate writes the exact library trace") {
  const fs::path dir = fresh_dir("simulate");
  write_file(dir / "cfg.txt", kConfigText);

  const CliResult r = run_cli("simulate --config \"" + (dir / "cfg.txt").string() +
                                  "\" --out \"" + (dir / "out").string() +
                                  "\" --seed 42",
                              dir);
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("validity: ok") != std::string::npos);

  // The files are byte-identical to what the library produces for the same
  // config and seed.
  ScenarioConfig cfg = parse_config(kConfigText);
  cfg.seed = 42;
  const RunTrace trace = run_scenario(cfg, cfg.seed);
  CHECK(slurp(dir / "out" / "trace.csv") == trace_csv(trace, cfg.n_robots));
  CHECK(slurp(dir / "out" / "selections.csv") == selection_csv(trace));

  // The echoed config round-trips to the overridden scenario.
  CHECK(parse_config(slurp(dir / "out" / "config.txt")) == cfg);

  // Header rows are pinned.
  const std::string csv = slurp(dir / "out" / "trace.csv");
  CHECK(csv.rfind("tick,time_s,logdet,rmse_agg,robot_id,det_robot,selected_ids\n",
                  0) == 0);
  CHECK(count_lines(csv) == 1 + 50 * 3);  // header + ticks x robots
  CHECK(slurp(dir / "out" / "selections.csv")
            .rfind("tick,observer,candidates,selected,scores\n", 0) == 0);

  // Atomic writes leave no temp files behind.
  for (const auto& entry : fs::directory_iterator(dir / "out")) {
    CHECK(entry.path().extension() != ".tmp");
  }
}

TEST_CASE("simulate is deterministic and seed-sensitive") {
  const fs::path dir = fresh_dir("determinism");
  write_file(dir / "cfg.txt", kConfigText);
  const std::string base = "simulate --config \"" + (dir / "cfg.txt").string() + "\"";

  REQUIRE(run_cli(base + " --out \"" + (dir / "a").string() + "\"", dir).exit_code == 0);
  REQUIRE(run_cli(base + " --out \"" + (dir / "b").string() + "\"", dir).exit_code == 0);
  REQUIRE(run_cli(base + " --out \"" + (dir / "c").string() + "\" --seed 8", dir)
              .exit_code == 0);

  CHECK(slurp(dir / "a" / "trace.csv") == slurp(dir / "b" / "trace.csv"));
  CHECK(slurp(dir / "a" / "trace.csv") != slurp(dir / "c" / "trace.csv"));
}

TEST_CASE("policy and budget overrides reach the scenario") {
  const fs::path dir = fresh_dir("overrides");
  write_file(dir / "cfg.txt", kConfigText);

  const CliResult r = run_cli(
      "simulate --config \"" + (dir / "cfg.txt").string() + "\" --out \"" +
          (dir / "out").string() + "\" --policy take-all --q 2",
      dir);
  REQUIRE(r.exit_code == 0);

  const ScenarioConfig echoed = parse_config(slurp(dir / "out" / "config.txt"));
  CHECK(echoed.policy == PolicyKind::take_all);
  CHECK(echoed.q == std::vector<int>(3, 2));
}

TEST_CASE("montecarlo aggregate matches the library") {
  const fs::path dir = fresh_dir("montecarlo");
  write_file(dir / "cfg.txt", kConfigText);

  const CliResult r = run_cli(
      "montecarlo --config \"" + (dir / "cfg.txt").string() + "\" --out \"" +
          (dir / "out").string() + "\" --runs 3 --seed 9",
      dir);
  INFO(r.err);
  REQUIRE(r.exit_code == 0);

  const nlohmann::json j =
      nlohmann::json::parse(slurp(dir / "out" / "aggregate.json"));
  CHECK(j.at("runs").get<int>() == 3);
  CHECK(j.at("seed").get<std::uint64_t>() == 9);
  CHECK(j.at("validity_ok").get<bool>());

  ScenarioConfig cfg = parse_config(kConfigText);
  cfg.runs = 3;
  cfg.seed = 9;
  CHECK(parse_config(j.at("config").get<std::string>()) == cfg);

  const AggregateTrace agg = run_monte_carlo(cfg, 3, 9);
  const auto log_mean_det = j.at("log_mean_det").get<std::vector<double>>();
  const auto mean_rmse = j.at("mean_rmse").get<std::vector<double>>();
  REQUIRE(log_mean_det.size() == agg.log_mean_det.size());
  for (std::size_t k = 0; k < log_mean_det.size(); ++k) {
    CHECK(log_mean_det[k] == agg.log_mean_det[k]);
    CHECK(mean_rmse[k] == agg.mean_rmse[k]);
  }
}

TEST_CASE("replay-utias matches the library replay") {
  const fs::path dir = fresh_dir("replay");
  const DatasetBundle bundle =
      coopsched::testfixture::make_synthetic_bundle(3, 20.0, 0.1, 0x42);
  fs::create_directories(dir / "ds");
  serialize_dataset(bundle, dir / "ds");

  const CliResult r = run_cli(
      "replay-utias --dataset \"" + (dir / "ds").string() + "\" --t0 1 "
          "--duration 10 --out \"" + (dir / "out").string() + "\" --seed 3",
      dir);
  INFO(r.err);
  REQUIRE(r.exit_code == 0);

  ScenarioConfig cfg = default_config();
  cfg.n_robots = 3;
  cfg.duration = 10.0;
  cfg.sensors.assign(3, finalize_sensor_params(SensorParams{}));
  cfg.q.assign(3, 1);
  cfg.windows.clear();
  cfg.seed = 3;
  const GriddedReplay replay = resample_to_grid(bundle, 1.0, 10.0, cfg.dt);
  const RunTrace trace = run_replay(cfg, replay, cfg.seed);
  CHECK(slurp(dir / "out" / "trace.csv") == trace_csv(trace, 3));
  CHECK(slurp(dir / "out" / "selections.csv") == selection_csv(trace));
}

TEST_CASE("bench-sched emits one row per configuration") {
  const fs::path dir = fresh_dir("bench");
  // A single tiny team keeps the smoke test fast while the default grid is
  // exercised by the dedicated benchmark runs.
  const CliResult r = run_cli(
      "bench-sched --runs 1 --out \"" + (dir / "out").string() + "\"", dir);
  INFO(r.err);
  REQUIRE(r.exit_code == 0);

  const std::string csv = slurp(dir / "out" / "bench.csv");
  CHECK(csv.rfind("n,q,greedy_trace_us,logdet_greedy_us\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + 3 * 3);  // header + |n_list| x |q_list|
}

TEST_CASE("verify-bounds reports a passing sweep") {
  const fs::path dir = fresh_dir("verify");
  const CliResult r = run_cli("verify-bounds --runs 50 --seed 5", dir);
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("verify-bounds: PASS") != std::string::npos);
  CHECK(r.out.find("determinant bound") != std::string::npos);
}

TEST_CASE("invalid invocations exit nonzero with a message") {
  const fs::path dir = fresh_dir("errors");
  write_file(dir / "cfg.txt", kConfigText);
  write_file(dir / "bad.txt", "robots = 3\nnonsense_key = 1\n");

  SECTION("no subcommand") {
    CHECK(run_cli("", dir).exit_code != 0);
  }
  SECTION("unknown subcommand") {
    CHECK(run_cli("frobnicate", dir).exit_code != 0);
  }
  SECTION("unknown flag is rejected") {
    const CliResult r = run_cli(
        "simulate --config \"" + (dir / "cfg.txt").string() + "\" --frobz 1",
        dir);
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("--frobz") != std::string::npos);
  }
  SECTION("config errors carry the offending line") {
    const CliResult r = run_cli(
        "simulate --config \"" + (dir / "bad.txt").string() + "\" --out \"" +
            (dir / "out").string() + "\"",
        dir);
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("config line 2") != std::string::npos);
  }
  SECTION("unknown policy names the valid set") {
    const CliResult r = run_cli(
        "simulate --config \"" + (dir / "cfg.txt").string() +
            "\" --policy quux --out \"" + (dir / "out").string() + "\"",
        dir);
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("quux") != std::string::npos);
    CHECK(r.err.find("alg1") != std::string::npos);
  }
  SECTION("missing dataset directory") {
    const CliResult r = run_cli(
        "replay-utias --dataset \"" + (dir / "nope").string() + "\" --out \"" +
            (dir / "out").string() + "\"",
        dir);
    CHECK(r.exit_code != 0);
  }
  SECTION("window outside the dataset range") {
    const DatasetBundle bundle =
        coopsched::testfixture::make_synthetic_bundle(2, 5.0, 0.1, 0x7);
    fs::create_directories(dir / "ds");
    serialize_dataset(bundle, dir / "ds");
    const CliResult r = run_cli(
        "replay-utias --dataset \"" + (dir / "ds").string() +
            "\" --t0 1 --duration 900 --out \"" + (dir / "out").string() + "\"",
        dir);
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("window outside data range") != std::string::npos);
  }
}

TEST_CASE("help lists every subcommand") {
  const fs::path dir = fresh_dir("help");
  const CliResult r = run_cli("--help", dir);
  REQUIRE(r.exit_code == 0);
  for (const char* name : {"simulate", "montecarlo", "replay-utias",
                           "bench-sched", "verify-bounds"}) {
    CHECK(r.out.find(name) != std::string::npos);
  }
}
