#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "coopsched/belief.hpp"
#include "coopsched/bounds.hpp"
#include "coopsched/config.hpp"
#include "coopsched/fusion.hpp"
#include "coopsched/kinematics.hpp"
#include "coopsched/linalg.hpp"
#include "coopsched/rng.hpp"
#include "coopsched/scheduling.hpp"
#include "coopsched/sensing.hpp"
#include "coopsched/utias.hpp"

namespace coopsched {

/// (logdet of the joint covariance, sum over robots of squared position
/// error).  The error sum is what the aggregate curves average; no square
/// root is taken anywhere.
struct Metrics {
  double logdet = 0.0;
  double agg_sq_err = 0.0;
};

inline Metrics compute_metrics(const JointBelief& b,
                               std::span<const RobotTruth> truths) {
  if (static_cast<int>(truths.size()) != b.n_robots()) {
    throw std::invalid_argument("compute_metrics: one truth per robot");
  }
  Metrics m;
  m.logdet = log_det_covariance(b);
  for (int i = 1; i <= b.n_robots(); ++i) {
    m.agg_sq_err += (b.estimate(i) - truths[i - 1].position).squaredNorm();
  }
  return m;
}

/// Random PSD matrix via the Gram construction G G^T with unit-normal
/// entries; `ridge` adds ridge * I for strict positive definiteness.
inline MatX random_spd_matrix(int dim, Stream& rng, double ridge = 0.0) {
  MatX g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  }
  MatX out = g * g.transpose() + ridge * MatX::Identity(dim, dim);
  return ((out + out.transpose()) / 2.0).eval();
}

/// Random valid belief for tests and benches: Gram-construction covariance
/// scaled by cov_scale, estimates uniform in [0, area]^2.
inline JointBelief random_joint_belief(int n, Stream& rng,
                                       double cov_scale = 0.01,
                                       double area = 5.0) {
  std::vector<Vec2> est;
  est.reserve(n);
  for (int i = 0; i < n; ++i) {
    est.emplace_back(rng.uniform(0.0, area), rng.uniform(0.0, area));
  }
  MatX cov = cov_scale * random_spd_matrix(2 * n, rng, 1e-3);
  return JointBelief(n, std::move(est), std::move(cov));
}

/// Everything recorded about one simulation tick.
struct TickRecord {
  std::int64_t tick = 0;
  double time_s = 0.0;
  double logdet = 0.0;       // after this tick's updates
  double agg_sq_err = 0.0;   // against truth at this tick
  std::vector<double> det_robot;  // det(P_ii) per robot
  Schedule schedule;
  int measurements_applied = 0;
  int measurements_skipped = 0;
  double bound_logdet = 0.0;  // log det of the running bound (if tracked)
};

/// Full per-run output plus the run-level health flags the CLI exit code
/// and the invariant suites key off.
struct RunTrace {
  std::uint64_t seed = 0;
  std::vector<TickRecord> ticks;
  bool validity_ok = true;          // symmetry/PSD/finite at every tick
  double worst_symmetry = 0.0;
  double worst_min_eigenvalue = 0.0;
  double max_update_logdet_rise = -std::numeric_limits<double>::infinity();
  bool offdiag_propagation_ok = true;  // propagation left cross blocks alone
  bool bound_ok = true;                // det(filter) <= det(bound) each tick
  double min_bound_margin = std::numeric_limits<double>::infinity();
  double final_logdet = 0.0;
  double final_agg_sq_err = 0.0;

  bool ok() const { return validity_ok; }
};

namespace detail {

struct SelectionContext {
  PolicyKind policy = PolicyKind::greedy_trace;
  std::span<const int> q;
  std::span<const SensorParams> params;
  RandomSelector* random_state = nullptr;
  std::uint64_t seed = 0;
};

/// Runs the configured policy for every observer with candidates, assembles
/// the chosen measurements in canonical order (ascending observer id, then
/// ascending target id), folds them in sequentially, and records the tick.
inline void select_and_update(
    JointBelief& belief, std::int64_t k,
    const std::vector<std::vector<RelativeMeasurement>>& candidates,
    std::span<const double> headings, SelectionContext& ctx, TickRecord& rec,
    RunTrace& trace, BoundState* bound) {
  const int n = belief.n_robots();
  rec.schedule.timestep = k;
  std::vector<RelativeMeasurement> chosen;

  for (int a = 1; a <= n; ++a) {
    const auto& cand = candidates[a - 1];
    if (cand.empty()) continue;
    SelectionRecord sel;
    sel.observer = a;
    for (const auto& m : cand) sel.candidates.push_back(m.target);

    const int q = ctx.q[a - 1];
    switch (ctx.policy) {
      case PolicyKind::greedy_trace: {
        const PolicyInput in = make_policy_input(
            belief, a, sel.candidates, q, ctx.params[a - 1].r_c);
        sel.scores = score_candidates(in);
        sel.selected = select_greedy_trace(in);
        break;
      }
      case PolicyKind::take_all: {
        const PolicyInput in = make_policy_input(
            belief, a, sel.candidates, n - 1, ctx.params[a - 1].r_c);
        sel.selected = select_take_all(in);
        break;
      }
      case PolicyKind::random: {
        const PolicyInput in = make_policy_input(
            belief, a, sel.candidates, q, ctx.params[a - 1].r_c);
        Stream rng = Stream::of(ctx.seed, StreamKind::policy,
                                static_cast<std::uint64_t>(k),
                                static_cast<std::uint64_t>(a));
        sel.selected = ctx.random_state->select(in, k, rng);
        break;
      }
      case PolicyKind::logdet_greedy: {
        sel.selected = select_logdet_greedy(belief, a, cand, headings,
                                            ctx.params, q);
        break;
      }
      case PolicyKind::brute_force: {
        sel.selected =
            select_brute_force(belief, a, cand, headings, ctx.params, q)
                .selection;
        break;
      }
    }
    for (RobotId target : sel.selected) {
      for (const auto& m : cand) {
        if (m.target == target) {
          chosen.push_back(m);
          break;
        }
      }
    }
    rec.schedule.records.push_back(std::move(sel));
  }

  std::sort(chosen.begin(), chosen.end(), [](const auto& x, const auto& y) {
    return x.observer != y.observer ? x.observer < y.observer
                                    : x.target < y.target;
  });
  auto [post, records] =
      sequential_update(std::move(belief), chosen, headings, ctx.params);
  belief = std::move(post);
  for (const UpdateRecord& r : records) {
    if (r.applied) {
      ++rec.measurements_applied;
      trace.max_update_logdet_rise = std::max(
          trace.max_update_logdet_rise, r.logdet_after - r.logdet_before);
      if (bound) bound->apply_update(r.observer, r.target);
    } else {
      ++rec.measurements_skipped;
    }
  }
}

inline void record_tick_health(const JointBelief& belief,
                               std::span<const RobotTruth> truths,
                               TickRecord& rec, RunTrace& trace,
                               const BoundState* bound) {
  const ValidityReport v = check_validity(belief);
  trace.validity_ok = trace.validity_ok && v.ok();
  trace.worst_symmetry = std::max(trace.worst_symmetry, v.symmetry_residual);
  trace.worst_min_eigenvalue =
      std::min(trace.worst_min_eigenvalue, v.min_eigenvalue);
  const Metrics m = compute_metrics(belief, truths);
  rec.logdet = m.logdet;
  rec.agg_sq_err = m.agg_sq_err;
  rec.det_robot.resize(belief.n_robots());
  for (int i = 1; i <= belief.n_robots(); ++i) {
    const Mat2 p = belief.block(i, i);
    rec.det_robot[i - 1] = p(0, 0) * p(1, 1) - p(0, 1) * p(1, 0);
  }
  if (bound) {
    rec.bound_logdet = log_det(bound->covariance());
    const double margin = rec.bound_logdet - rec.logdet;
    trace.min_bound_margin = std::min(trace.min_bound_margin, margin);
    trace.bound_ok = trace.bound_ok && margin >= -1e-9;
  }
}

inline bool offdiag_blocks_equal(const MatX& a, const MatX& b, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (a.block<2, 2>(2 * i, 2 * j) != b.block<2, 2>(2 * i, 2 * j)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace detail

/// One synthetic run.  Per tick: propagate with the previous tick's odometry,
/// advance the truth, sample fresh odometry/compass, build the candidate
/// measurement set for every allowed observer (independent of policy, so
/// paired-seed policy comparisons see identical noise), select, update
/// sequentially, record.  Pure function of (cfg, seed).
inline RunTrace run_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  const int n = cfg.n_robots;
  const auto ticks = static_cast<std::int64_t>(std::llround(cfg.duration / cfg.dt));

  std::vector<RobotTruth> truths(n);
  const std::vector<Vec2> formation = mesh_formation(n, cfg.mesh_spacing);
  std::vector<Vec2> estimates(n);
  const double init_std = std::sqrt(cfg.init_var);
  for (int i = 0; i < n; ++i) {
    Stream init_rng = Stream::of(seed, StreamKind::truth_init,
                                 static_cast<std::uint64_t>(i + 1));
    truths[i].position = formation[i];
    truths[i].heading = init_rng.uniform(0.0, 2.0 * std::numbers::pi);
    Stream est_rng = Stream::of(seed, StreamKind::estimate_init,
                                static_cast<std::uint64_t>(i + 1));
    estimates[i] = truths[i].position +
                   Vec2{est_rng.normal(0.0, init_std),
                        est_rng.normal(0.0, init_std)};
  }
  JointBelief belief = init_joint_belief(
      estimates, Mat2(cfg.init_var * Mat2::Identity()));

  BoundState bound;
  if (cfg.track_bound) bound = BoundState(belief, cfg.sensors, cfg.dt);

  RandomSelector random_state(std::max<std::int64_t>(
      1, std::llround(cfg.random_period_s / cfg.dt)));
  detail::SelectionContext ctx;
  ctx.policy = cfg.policy;
  ctx.q = cfg.q;
  ctx.params = cfg.sensors;
  ctx.random_state = &random_state;
  ctx.seed = seed;

  auto sample_odometry = [&](std::int64_t k) {
    std::vector<OdometryReading> odo(n);
    for (int i = 0; i < n; ++i) {
      Stream rng = Stream::of(seed, StreamKind::odometry,
                              static_cast<std::uint64_t>(k),
                              static_cast<std::uint64_t>(i + 1));
      odo[i] = synthesize_odometry(truths[i], cfg.v_cmd, cfg.dt,
                                   cfg.sensors[i], rng);
    }
    return odo;
  };

  RunTrace trace;
  trace.seed = seed;
  trace.ticks.reserve(ticks);
  std::vector<OdometryReading> odo = sample_odometry(0);

  for (std::int64_t k = 1; k <= ticks; ++k) {
    // Covariance/estimate propagation with the odometry sampled last tick.
    const MatX cov_before = belief.covariance();
    belief = propagate_belief(std::move(belief), odo, cfg.sensors);
    trace.offdiag_propagation_ok =
        trace.offdiag_propagation_ok &&
        detail::offdiag_blocks_equal(cov_before, belief.covariance(), n);
    if (cfg.track_bound) bound.propagate();

    for (int i = 0; i < n; ++i) {
      truths[i] = step_truth(truths[i], cfg.v_cmd, cfg.omega_cmd, cfg.dt);
    }
    odo = sample_odometry(k);
    std::vector<double> headings(n);
    for (int i = 0; i < n; ++i) headings[i] = odo[i].phi_m;

    // Candidate measurements for every allowed observer, gathered before any
    // selection so every policy sees the same realizations.
    const double t = static_cast<double>(k) * cfg.dt;
    std::vector<std::vector<RelativeMeasurement>> candidates(n);
    for (RobotId a : observers_at(cfg.windows, t)) {
      for (RobotId b2 = 1; b2 <= n; ++b2) {
        if (b2 == a) continue;
        Stream rng = Stream::of(seed, StreamKind::measurement,
                                static_cast<std::uint64_t>(k),
                                static_cast<std::uint64_t>(a),
                                static_cast<std::uint64_t>(b2));
        auto m = generate_measurement(a, truths[a - 1], b2, truths[b2 - 1], k,
                                      cfg.sensors[a - 1], rng);
        if (m) candidates[a - 1].push_back(*m);
      }
    }

    TickRecord rec;
    rec.tick = k;
    rec.time_s = t;
    detail::select_and_update(belief, k, candidates, headings, ctx, rec,
                              trace, cfg.track_bound ? &bound : nullptr);
    detail::record_tick_health(belief, truths, rec, trace,
                               cfg.track_bound ? &bound : nullptr);
    trace.ticks.push_back(std::move(rec));
  }

  if (!trace.ticks.empty()) {
    trace.final_logdet = trace.ticks.back().logdet;
    trace.final_agg_sq_err = trace.ticks.back().agg_sq_err;
  } else {
    const Metrics m = compute_metrics(belief, truths);
    trace.final_logdet = m.logdet;
    trace.final_agg_sq_err = m.agg_sq_err;
  }
  return trace;
}

/// Replay of a gridded dataset window.  Truth comes from interpolated
/// groundtruth; odometry speeds come from the dataset (clamped to v_max);
/// the measured heading is groundtruth plus compass noise (the dataset has
/// no compass channel); candidate sets are exactly the robots measured in
/// the dataset at each tick.
inline RunTrace run_replay(const ScenarioConfig& cfg,
                           const GriddedReplay& replay, std::uint64_t seed) {
  const int n = replay.n_robots;
  if (cfg.n_robots != n) {
    throw std::invalid_argument("run_replay: config robot count != dataset");
  }
  if (cfg.dt != replay.dt) {
    throw std::invalid_argument("run_replay: config dt != replay grid dt");
  }
  validate_config(cfg);

  auto truth_at = [&](std::int64_t k) {
    std::vector<RobotTruth> t(n);
    for (int i = 0; i < n; ++i) {
      t[i].position = replay.ticks[k].position_true[i];
      t[i].heading = replay.ticks[k].heading_true[i];
    }
    return t;
  };

  std::vector<RobotTruth> truths = truth_at(0);
  std::vector<Vec2> estimates(n);
  const double init_std = std::sqrt(cfg.init_var);
  for (int i = 0; i < n; ++i) {
    Stream est_rng = Stream::of(seed, StreamKind::estimate_init,
                                static_cast<std::uint64_t>(i + 1));
    estimates[i] = truths[i].position +
                   Vec2{est_rng.normal(0.0, init_std),
                        est_rng.normal(0.0, init_std)};
  }
  JointBelief belief = init_joint_belief(
      estimates, Mat2(cfg.init_var * Mat2::Identity()));

  BoundState bound;
  if (cfg.track_bound) bound = BoundState(belief, cfg.sensors, cfg.dt);

  RandomSelector random_state(std::max<std::int64_t>(
      1, std::llround(cfg.random_period_s / cfg.dt)));
  detail::SelectionContext ctx;
  ctx.policy = cfg.policy;
  ctx.q = cfg.q;
  ctx.params = cfg.sensors;
  ctx.random_state = &random_state;
  ctx.seed = seed;

  auto sample_odometry = [&](std::int64_t k) {
    std::vector<OdometryReading> odo(n);
    for (int i = 0; i < n; ++i) {
      Stream rng = Stream::of(seed, StreamKind::odometry,
                              static_cast<std::uint64_t>(k),
                              static_cast<std::uint64_t>(i + 1));
      OdometryReading r;
      r.dt = replay.dt;
      r.v_m = std::clamp(replay.ticks[k].v[i], -cfg.sensors[i].v_max,
                         cfg.sensors[i].v_max);
      r.phi_m = normalize_heading(replay.ticks[k].heading_true[i] +
                                  rng.normal(0.0, cfg.sensors[i].sigma_phi));
      odo[i] = r;
    }
    return odo;
  };

  RunTrace trace;
  trace.seed = seed;
  const std::int64_t ticks = replay.grid_ticks();
  trace.ticks.reserve(ticks);
  std::vector<OdometryReading> odo = sample_odometry(0);

  for (std::int64_t k = 1; k <= ticks; ++k) {
    const MatX cov_before = belief.covariance();
    belief = propagate_belief(std::move(belief), odo, cfg.sensors);
    trace.offdiag_propagation_ok =
        trace.offdiag_propagation_ok &&
        detail::offdiag_blocks_equal(cov_before, belief.covariance(), n);
    if (cfg.track_bound) bound.propagate();

    truths = truth_at(k);
    odo = sample_odometry(k);
    std::vector<double> headings(n);
    for (int i = 0; i < n; ++i) headings[i] = odo[i].phi_m;

    std::vector<std::vector<RelativeMeasurement>> candidates(n);
    for (const GriddedMeasurement& g : replay.ticks[k].measurements) {
      const SensorParams& p = cfg.sensors[g.observer - 1];
      const double range = std::clamp(g.range, 0.0, p.rho_max);
      candidates[g.observer - 1].push_back(
          RelativeMeasurement::from_range_bearing(g.observer, g.target, k,
                                                  range, g.bearing));
    }

    TickRecord rec;
    rec.tick = k;
    rec.time_s = replay.t0 + static_cast<double>(k) * replay.dt;
    detail::select_and_update(belief, k, candidates, headings, ctx, rec,
                              trace, cfg.track_bound ? &bound : nullptr);
    detail::record_tick_health(belief, truths, rec, trace,
                               cfg.track_bound ? &bound : nullptr);
    trace.ticks.push_back(std::move(rec));
  }

  if (!trace.ticks.empty()) {
    trace.final_logdet = trace.ticks.back().logdet;
    trace.final_agg_sq_err = trace.ticks.back().agg_sq_err;
  }
  return trace;
}

/// Per-tick aggregate over M runs: log of the mean determinant (computed in
/// log space) and the mean aggregated squared error.
struct AggregateTrace {
  int runs = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> run_seeds;
  std::vector<double> time_s;
  std::vector<double> log_mean_det;
  std::vector<double> mean_rmse;
  bool validity_ok = true;

  double final_log_mean_det() const {
    return log_mean_det.empty() ? 0.0 : log_mean_det.back();
  }
  double final_mean_rmse() const {
    return mean_rmse.empty() ? 0.0 : mean_rmse.back();
  }
};

/// Number of Monte Carlo workers: an explicit request wins, otherwise the
/// COOPSCHED_THREADS environment variable, otherwise the hardware count.
inline int resolve_thread_count(int requested, int jobs) {
  int threads = requested;
  if (threads <= 0) {
    if (const char* env = std::getenv("COOPSCHED_THREADS")) {
      threads = std::atoi(env);
    }
  }
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
  }
  return std::clamp(threads, 1, std::max(1, jobs));
}

inline std::uint64_t run_seed_for(std::uint64_t master, int run_index) {
  return derive_key(master, 0x52u, static_cast<std::uint64_t>(run_index));
}

/// M independent runs with derived per-run seeds, reduced deterministically
/// by run index.  A failed run aborts the aggregate with its seed named.
inline AggregateTrace run_monte_carlo(const ScenarioConfig& cfg, int runs,
                                      std::uint64_t master_seed,
                                      int threads = 0) {
  if (runs < 1) throw std::invalid_argument("run_monte_carlo: runs must be >= 1");
  validate_config(cfg);

  std::vector<RunTrace> traces(runs);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    for (int r = next.fetch_add(1); r < runs; r = next.fetch_add(1)) {
      try {
        traces[r] = run_scenario(cfg, run_seed_for(master_seed, r));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          try {
            std::throw_with_nested(std::runtime_error(
                "monte carlo run " + std::to_string(r) + " (seed " +
                std::to_string(run_seed_for(master_seed, r)) + ") failed"));
          } catch (...) {
            failure = std::current_exception();
          }
        }
        return;
      }
    }
  };

  const int n_threads = resolve_thread_count(threads, runs);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  AggregateTrace agg;
  agg.runs = runs;
  agg.master_seed = master_seed;
  for (int r = 0; r < runs; ++r) {
    agg.run_seeds.push_back(traces[r].seed);
    agg.validity_ok = agg.validity_ok && traces[r].ok();
  }
  const std::size_t ticks = traces[0].ticks.size();
  for (const RunTrace& t : traces) {
    if (t.ticks.size() != ticks) {
      throw std::logic_error("run_monte_carlo: run lengths differ");
    }
  }
  agg.time_s.resize(ticks);
  agg.log_mean_det.resize(ticks);
  agg.mean_rmse.resize(ticks);
  std::vector<double> logdets(runs);
  for (std::size_t k = 0; k < ticks; ++k) {
    agg.time_s[k] = traces[0].ticks[k].time_s;
    double err = 0.0;
    for (int r = 0; r < runs; ++r) {
      logdets[r] = traces[r].ticks[k].logdet;
      err += traces[r].ticks[k].agg_sq_err;
    }
    agg.log_mean_det[k] =
        log_sum_exp(logdets) - std::log(static_cast<double>(runs));
    agg.mean_rmse[k] = err / static_cast<double>(runs);
  }
  return agg;
}

/// Scheduling micro-benchmark: mean wall time per selector invocation on
/// randomized valid beliefs, with enough repetitions for a stable clock
/// reading.  Instances at a given (trial, N) are shared across q values so
/// budget sweeps are paired.
struct BenchRow {
  int n = 0;
  int q = 0;
  double greedy_trace_us = 0.0;
  double logdet_greedy_us = 0.0;
};

inline std::vector<BenchRow> bench_scheduling(std::span<const int> n_list,
                                              std::span<const int> q_list,
                                              int trials,
                                              std::uint64_t seed = 0x6e9c) {
  if (trials < 1) throw std::invalid_argument("bench_scheduling: trials < 1");
  using clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;

  struct Instance {
    JointBelief belief;
    std::vector<RelativeMeasurement> candidates;
    std::vector<double> headings;
    std::vector<SensorParams> params;
    PolicyInput input;
  };

  for (int n : n_list) {
    if (n < 2) throw std::invalid_argument("bench_scheduling: need n >= 2");
    std::vector<Instance> instances;
    instances.reserve(trials);
    const SensorParams base = finalize_sensor_params(SensorParams{});
    for (int trial = 0; trial < trials; ++trial) {
      Stream rng = Stream::of(seed, StreamKind::scratch,
                              static_cast<std::uint64_t>(n),
                              static_cast<std::uint64_t>(trial));
      Instance inst{random_joint_belief(n, rng, 0.01,
                                        0.4 * base.rho_max / std::sqrt(2.0)),
                    {}, {}, {}, {}};
      inst.params.assign(n, base);
      inst.headings.resize(n);
      std::vector<RobotTruth> truths(n);
      for (int i = 0; i < n; ++i) {
        truths[i].position = inst.belief.estimate(i + 1);
        truths[i].heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
        inst.headings[i] = truths[i].heading;
      }
      std::vector<RobotId> detected;
      for (RobotId b2 = 2; b2 <= n; ++b2) {
        auto m = generate_measurement(1, truths[0], b2, truths[b2 - 1], 0,
                                      base, rng);
        if (m) {
          inst.candidates.push_back(*m);
          detected.push_back(b2);
        }
      }
      inst.input = make_policy_input(inst.belief, 1, detected, 1, base.r_c);
      instances.push_back(std::move(inst));
    }

    for (int q : q_list) {
      BenchRow row;
      row.n = n;
      row.q = q;

      {  // greedy trace ranking: amortized over many repetitions
        std::size_t sink = 0;
        long calls = 0;
        const auto start = clock::now();
        double elapsed = 0.0;
        while (elapsed < 0.05) {
          for (Instance& inst : instances) {
            inst.input.q = q;
            const auto picks = select_greedy_trace(inst.input);
            sink += picks.size() + (picks.empty() ? 0 : picks.front());
            ++calls;
          }
          elapsed = std::chrono::duration<double>(clock::now() - start).count();
        }
        if (sink == static_cast<std::size_t>(-1)) std::abort();  // keep `sink` live
        row.greedy_trace_us = 1e6 * elapsed / static_cast<double>(calls);
      }

      {  // simulated-update greedy
        std::size_t sink = 0;
        long calls = 0;
        const auto start = clock::now();
        double elapsed = 0.0;
        while (elapsed < 0.05) {
          for (const Instance& inst : instances) {
            const auto picks = select_logdet_greedy(
                inst.belief, 1, inst.candidates, inst.headings, inst.params, q);
            sink += picks.size() + (picks.empty() ? 0 : picks.front());
            ++calls;
          }
          elapsed = std::chrono::duration<double>(clock::now() - start).count();
        }
        if (sink == static_cast<std::size_t>(-1)) std::abort();
        row.logdet_greedy_us = 1e6 * elapsed / static_cast<double>(calls);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace coopsched
