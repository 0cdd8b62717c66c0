// coopsched: joint-EKF cooperative localization with measurement scheduling.
//
// Subcommands map one-to-one onto the library's entry points:
//   simulate      one synthetic run -> trace.csv + selections.csv
//   montecarlo    M synthetic runs  -> aggregate.json
//   replay-utias  dataset window    -> trace.csv + selections.csv
//   bench-sched   selector timing   -> bench.csv
//   verify-bounds randomized sweeps over the determinant bound and its lemmas
//
// Every file is written atomically (temp file + rename).  The process exits 0
// only when the requested work completed and every validity check passed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coopsched/coopsched.hpp"

namespace fs = std::filesystem;
using namespace coopsched;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<int> q;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", f.config_path, "Scenario config file");
  }
  cmd->add_option("--out", f.out_dir, "Output directory (created if missing)")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Seed override (decimal u64)");
  cmd->add_option("--policy", f.policy,
                  "Policy override: alg1 | random | logdet-greedy | "
                  "take-all | brute-force");
  cmd->add_option("--q", f.q, "Per-robot measurement budget override");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Loads the config (or defaults) and applies the command-line overrides.
PolicyKind policy_from_flag(const std::string& name) {
  const std::optional<PolicyKind> kind = parse_policy(name);
  if (!kind) {
    throw std::runtime_error(
        "unknown policy '" + name +
        "' (expected alg1 | random | logdet-greedy | take-all | brute-force)");
  }
  return *kind;
}

ScenarioConfig load_config(const CommonFlags& f) {
  ScenarioConfig cfg = f.config_path.empty()
                           ? default_config()
                           : parse_config(read_text_file(f.config_path));
  if (f.seed) cfg.seed = *f.seed;
  if (f.policy) cfg.policy = policy_from_flag(*f.policy);
  if (f.q) {
    if (*f.q < 0) throw std::runtime_error("--q must be >= 0");
    cfg.q.assign(cfg.n_robots, *f.q);
  }
  validate_config(cfg);
  return cfg;
}

void write_outputs(const fs::path& out_dir, const RunTrace& trace,
                   const ScenarioConfig& cfg) {
  fs::create_directories(out_dir);
  atomic_write_file(out_dir / "trace.csv", trace_csv(trace, cfg.n_robots));
  atomic_write_file(out_dir / "selections.csv", selection_csv(trace));
  atomic_write_file(out_dir / "config.txt", serialize_config(cfg));
}

/// Shared exit gate: zero only when every recorded health flag is clean.
int finish_run(const RunTrace& trace, const ScenarioConfig& cfg) {
  const bool ok = trace.validity_ok && trace.offdiag_propagation_ok &&
                  (!cfg.track_bound || trace.bound_ok);
  std::cout << "final logdet " << trace.final_logdet
            << ", final aggregate squared error " << trace.final_agg_sq_err
            << "\n";
  std::cout << "validity: " << (ok ? "ok" : "FAILED") << "\n";
  return ok ? 0 : 1;
}

int cmd_simulate(const CommonFlags& f) {
  const ScenarioConfig cfg = load_config(f);
  const RunTrace trace = run_scenario(cfg, cfg.seed);
  write_outputs(f.out_dir, trace, cfg);
  std::cout << "simulate: " << trace.ticks.size() << " ticks, seed "
            << cfg.seed << ", wrote " << f.out_dir << "/trace.csv and "
            << f.out_dir << "/selections.csv\n";
  return finish_run(trace, cfg);
}

int cmd_montecarlo(const CommonFlags& f, std::optional<int> runs) {
  ScenarioConfig cfg = load_config(f);
  if (runs) {
    if (*runs < 1) throw std::runtime_error("--runs must be >= 1");
    cfg.runs = *runs;
  }
  const AggregateTrace agg = run_monte_carlo(cfg, cfg.runs, cfg.seed);
  fs::create_directories(f.out_dir);
  atomic_write_file(fs::path(f.out_dir) / "aggregate.json",
                    aggregate_json(agg, cfg));
  std::cout << "montecarlo: " << agg.runs << " runs, master seed "
            << agg.master_seed << ", wrote " << f.out_dir
            << "/aggregate.json\n";
  std::cout << "final log mean det " << agg.final_log_mean_det()
            << ", final mean squared error " << agg.final_mean_rmse() << "\n";
  std::cout << "validity: " << (agg.validity_ok ? "ok" : "FAILED") << "\n";
  return agg.validity_ok ? 0 : 1;
}

int cmd_replay(const CommonFlags& f, const std::string& dataset,
               std::optional<double> t0, double duration) {
  const DatasetBundle bundle = load_dataset(dataset);
  if (bundle.n_robots() == 0) {
    throw std::runtime_error("dataset has no robots: " + dataset);
  }

  ScenarioConfig cfg;
  if (f.config_path.empty()) {
    // Derive a config matching the dataset: the time table is irrelevant on
    // replay (the dataset decides who measures when), so it is cleared.
    cfg = default_config();
    cfg.n_robots = bundle.n_robots();
    cfg.duration = duration;
    cfg.sensors.assign(cfg.n_robots, finalize_sensor_params(SensorParams{}));
    cfg.q.assign(cfg.n_robots, 1);
    cfg.windows.clear();
  } else {
    cfg = parse_config(read_text_file(f.config_path));
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.policy) cfg.policy = policy_from_flag(*f.policy);
  if (f.q) {
    if (*f.q < 0) throw std::runtime_error("--q must be >= 0");
    cfg.q.assign(cfg.n_robots, *f.q);
  }
  validate_config(cfg);

  // Default window start: the latest first-odometry stamp, so every robot's
  // data covers the grid.
  double start = t0.value_or(0.0);
  if (!t0) {
    for (const auto& odo : bundle.odometry) {
      if (odo.empty()) throw std::runtime_error("dataset robot has no odometry");
      start = std::max(start, odo.front().t);
    }
  }

  const GriddedReplay replay = resample_to_grid(bundle, start, duration, cfg.dt);
  const RunTrace trace = run_replay(cfg, replay, cfg.seed);
  write_outputs(f.out_dir, trace, cfg);
  std::cout << "replay-utias: " << trace.ticks.size() << " ticks over ["
            << start << ", " << start + duration << "] s, wrote " << f.out_dir
            << "/trace.csv and " << f.out_dir << "/selections.csv\n";
  return finish_run(trace, cfg);
}

int cmd_bench(const std::string& out_dir, std::uint64_t seed, int trials) {
  if (trials < 1) throw std::runtime_error("--runs must be >= 1");
  const std::vector<int> n_list = {5, 9, 15};
  const std::vector<int> q_list = {1, 3, 5};
  const std::vector<BenchRow> rows = bench_scheduling(n_list, q_list, trials, seed);

  std::string csv = "n,q,greedy_trace_us,logdet_greedy_us\n";
  std::cout << "  n   q   greedy-trace [us]   logdet-greedy [us]\n";
  for (const BenchRow& r : rows) {
    csv += std::to_string(r.n) + ',' + std::to_string(r.q) + ',' +
           detail::csv_number(r.greedy_trace_us) + ',' +
           detail::csv_number(r.logdet_greedy_us) + '\n';
    std::printf("%3d %3d %19.3f %20.3f\n", r.n, r.q, r.greedy_trace_us,
                r.logdet_greedy_us);
  }
  fs::create_directories(out_dir);
  atomic_write_file(fs::path(out_dir) / "bench.csv", csv);
  std::cout << "bench-sched: wrote " << out_dir << "/bench.csv\n";
  return 0;
}

/// Randomized sweeps over the determinant bound and the two trace lemmas it
/// rests on.  Prints one line per property; exits 0 only if all instances
/// hold.
int cmd_verify_bounds(std::uint64_t seed, int instances) {
  if (instances < 1) throw std::runtime_error("--runs must be >= 1");
  const SensorParams params = finalize_sensor_params(SensorParams{});

  int theorem_checked = 0, theorem_held = 0;
  int a1_held = 0, a2_held = 0;

  for (int i = 0; i < instances; ++i) {
    Stream rng = Stream::of(seed, StreamKind::scratch, 0x7e0,
                            static_cast<std::uint64_t>(i));

    // Determinant bound: one relative-measurement EKF update against the
    // closed-form upper bound on the posterior determinant.
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 4.999));
    JointBelief belief = random_joint_belief(n, rng, 0.01, 4.0);
    const int a = 1 + static_cast<int>(rng.uniform(0.0, double(n) - 1e-9));
    int b = 1 + static_cast<int>(rng.uniform(0.0, double(n) - 1e-9));
    if (b == a) b = (a % n) + 1;

    std::vector<double> headings(n);
    std::vector<RobotTruth> truths(n);
    std::vector<SensorParams> all_params(n, params);
    for (int r = 0; r < n; ++r) {
      truths[r].position = belief.estimate(r + 1);
      truths[r].heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
      headings[r] = truths[r].heading;
    }
    const auto m = generate_measurement(a, truths[a - 1], b, truths[b - 1],
                                        belief.timestep(), params, rng);
    if (m) {
      const MatX prior = belief.covariance();
      const auto [post, rec] =
          ekf_update_single(std::move(belief), *m, headings, all_params);
      if (rec.applied) {
        ++theorem_checked;
        const DetBound bound =
            updated_det_upper_bound(prior, a, b, params.r_c, n);
        const double lhs = std::exp(log_det_covariance(post));
        if (lhs <= bound.value * (1.0 + 1e-9)) ++theorem_held;
      }
    }

    // Lemma: det(I + A) >= 1 + tr(A) for positive semidefinite A.
    const int dim = 2 + static_cast<int>(rng.uniform(0.0, 4.999));
    const MatX psd = 0.1 * random_spd_matrix(dim, rng);
    if (check_det_trace_inequality(psd, 1e-10).holds) ++a1_held;

    // Lemma: for a PSD block matrix [[A, B^T], [B, C]] with A positive
    // definite, tr(A + C - B - B^T) >= tr(A + B A^{-1} B^T - B - B^T) >= 0.
    const MatX block_a = random_spd_matrix(2, rng, 1e-3);
    MatX block_b(2, 2);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) block_b(r, c) = rng.normal();
    const MatX block_c = (block_b * block_a.inverse() * block_b.transpose() +
                          random_spd_matrix(2, rng))
                             .eval();
    if (check_block_trace_inequality(block_a, block_b, block_c, 1e-10).holds) {
      ++a2_held;
    }
  }

  const bool ok = theorem_held == theorem_checked && theorem_checked > 0 &&
                  a1_held == instances && a2_held == instances;
  std::cout << "determinant bound: " << theorem_held << "/" << theorem_checked
            << " updates within bound\n";
  std::cout << "det-trace lemma:   " << a1_held << "/" << instances
            << " instances hold\n";
  std::cout << "block-trace lemma: " << a2_held << "/" << instances
            << " instances hold\n";
  std::cout << "verify-bounds: " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Cooperative localization simulator: joint EKF with scheduled "
      "robot-to-robot measurements"};
  app.require_subcommand(1);

  CommonFlags sim_flags;
  CLI::App* sim = app.add_subcommand("simulate", "Run one synthetic scenario");
  add_common(sim, sim_flags);

  CommonFlags mc_flags;
  std::optional<int> mc_runs;
  CLI::App* mc =
      app.add_subcommand("montecarlo", "Aggregate many synthetic runs");
  add_common(mc, mc_flags);
  mc->add_option("--runs", mc_runs, "Number of Monte Carlo runs");

  CommonFlags rp_flags;
  std::string dataset;
  std::optional<double> t0;
  double duration = 300.0;
  CLI::App* rp = app.add_subcommand(
      "replay-utias", "Replay a window of a UTIAS-format dataset");
  add_common(rp, rp_flags);
  rp->add_option("--dataset", dataset, "Dataset directory")->required();
  rp->add_option("--t0", t0,
                 "Window start in dataset time (default: latest first "
                 "odometry stamp)");
  rp->add_option("--duration", duration, "Window length in seconds")
      ->capture_default_str();

  std::string bench_out = "out";
  std::uint64_t bench_seed = 0x6e9c;
  int bench_trials = 8;
  CLI::App* bench =
      app.add_subcommand("bench-sched", "Time the scheduling policies");
  bench->add_option("--out", bench_out, "Output directory")
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "Benchmark instance seed");
  bench->add_option("--runs", bench_trials, "Instances per team size")
      ->capture_default_str();

  std::uint64_t vb_seed = 0xb0;
  int vb_runs = 1000;
  CLI::App* vb = app.add_subcommand(
      "verify-bounds", "Randomized checks of the determinant bound");
  vb->add_option("--seed", vb_seed, "Sweep seed");
  vb->add_option("--runs", vb_runs, "Instances per property")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_flags);
    if (mc->parsed()) return cmd_montecarlo(mc_flags, mc_runs);
    if (rp->parsed()) return cmd_replay(rp_flags, dataset, t0, duration);
    if (bench->parsed()) return cmd_bench(bench_out, bench_seed, bench_trials);
    if (vb->parsed()) return cmd_verify_bounds(vb_seed, vb_runs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
