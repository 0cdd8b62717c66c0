#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coopsched/belief.hpp"
#include "coopsched/bounds.hpp"
#include "coopsched/fusion.hpp"
#include "coopsched/rng.hpp"

namespace coopsched {

/// Ridge added to the observer's own covariance block before inversion in
/// the landmark score, so a (numerically) singular block degrades gracefully
/// instead of aborting a selection round.
inline constexpr double kScoreRegularization = 1e-12;

/// Brute-force subset search refuses larger candidate sets.
inline constexpr int kBruteForceMaxCandidates = 8;

enum class PolicyKind {
  greedy_trace,   // "alg1": communication-free greedy score ranking
  random,         // "random": periodically redrawn random subsets
  logdet_greedy,  // "logdet-greedy": simulated-update greedy oracle
  take_all,       // "take-all": process every candidate
  brute_force,    // "brute-force": exhaustive subset oracle
};

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::greedy_trace: return "alg1";
    case PolicyKind::random: return "random";
    case PolicyKind::logdet_greedy: return "logdet-greedy";
    case PolicyKind::take_all: return "take-all";
    case PolicyKind::brute_force: return "brute-force";
  }
  return "unknown";
}

inline std::optional<PolicyKind> parse_policy(std::string_view name) {
  if (name == "alg1") return PolicyKind::greedy_trace;
  if (name == "random") return PolicyKind::random;
  if (name == "logdet-greedy") return PolicyKind::logdet_greedy;
  if (name == "take-all") return PolicyKind::take_all;
  if (name == "brute-force") return PolicyKind::brute_force;
  return std::nullopt;
}

/// Exactly the information one observer may consult when ranking its
/// detected neighbors: its own covariance block, its cross blocks to the
/// detected robots, its budget and its noise bound.  Policies built on this
/// type cannot accidentally read another robot's diagonal block.
struct PolicyInput {
  struct Candidate {
    RobotId id = 0;
    Mat2 p_cross = Mat2::Zero();  // P_{observer, id}
  };

  RobotId observer = 0;
  int q = 0;            // selection budget, >= 0
  double r_c = 0.0;     // observer's scalar noise bound
  Mat2 p_self = Mat2::Zero();
  std::vector<Candidate> candidates;  // ascending id, no duplicates

  const Candidate& candidate(RobotId id) const {
    for (const Candidate& c : candidates) {
      if (c.id == id) return c;
    }
    throw std::out_of_range("PolicyInput: id not among candidates");
  }
};

inline PolicyInput make_policy_input(const JointBelief& b, RobotId observer,
                                     std::span<const RobotId> detected, int q,
                                     double r_c) {
  if (q < 0) throw std::invalid_argument("make_policy_input: q < 0");
  if (!(r_c > 0.0)) throw std::invalid_argument("make_policy_input: r_c <= 0");
  PolicyInput in;
  in.observer = observer;
  in.q = q;
  in.r_c = r_c;
  in.p_self = b.block(observer, observer);
  std::vector<RobotId> ids(detected.begin(), detected.end());
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == observer || (i > 0 && ids[i] == ids[i - 1])) {
      throw std::invalid_argument("make_policy_input: bad detected set");
    }
    in.candidates.push_back({ids[i], b.block(observer, ids[i])});
  }
  return in;
}

/// Landmark score: the guaranteed relative determinant drop from measuring
/// candidate j, computed from observer-local blocks only:
///   J_j = r_c^-1 * tr(P_ii + P_ij^T P_ii^-1 P_ij - P_ij - P_ij^T).
inline double score_landmark(const PolicyInput& in, RobotId j) {
  const PolicyInput::Candidate& c = in.candidate(j);
  return pair_gain_trace(in.p_self, c.p_cross, kScoreRegularization) / in.r_c;
}

/// Scores aligned with in.candidates.
inline std::vector<double> score_candidates(const PolicyInput& in) {
  std::vector<double> s;
  s.reserve(in.candidates.size());
  for (const auto& c : in.candidates) s.push_back(score_landmark(in, c.id));
  return s;
}

/// Greedy score ranking: the q highest-scoring candidates, highest first,
/// ties broken toward the smaller id.  With q >= |candidates| every
/// candidate is returned in ascending id order and no scores are needed.
inline std::vector<RobotId> select_greedy_trace(const PolicyInput& in) {
  std::vector<RobotId> out;
  if (in.q <= 0) return out;
  if (in.q >= static_cast<int>(in.candidates.size())) {
    for (const auto& c : in.candidates) out.push_back(c.id);
    return out;
  }
  const std::vector<double> scores = score_candidates(in);
  std::vector<std::size_t> order(in.candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (scores[a] != scores[b]) return scores[a] > scores[b];
                     return in.candidates[a].id < in.candidates[b].id;
                   });
  for (int k = 0; k < in.q; ++k) out.push_back(in.candidates[order[k]].id);
  return out;
}

/// CLI alias for the greedy score ranking.
inline std::vector<RobotId> select_alg1(const PolicyInput& in) {
  return select_greedy_trace(in);
}

/// Every candidate, ascending.
inline std::vector<RobotId> select_take_all(const PolicyInput& in) {
  std::vector<RobotId> out;
  for (const auto& c : in.candidates) out.push_back(c.id);
  return out;
}

/// Random baseline: each observer redraws a uniform subset of its detected
/// set every `period_ticks` ticks and keeps it until the next redraw,
/// intersected with whatever is currently detectable.
class RandomSelector {
 public:
  explicit RandomSelector(std::int64_t period_ticks)
      : period_ticks_(period_ticks) {
    if (period_ticks_ < 1) {
      throw std::invalid_argument("RandomSelector: period must be >= 1 tick");
    }
  }

  std::vector<RobotId> select(const PolicyInput& in, std::int64_t tick,
                              Stream& rng) {
    State& st = state_[in.observer];
    if (st.next_redraw_tick_valid && tick < st.next_redraw_tick) {
      std::vector<RobotId> out;
      for (RobotId id : st.picks) {
        if (std::any_of(in.candidates.begin(), in.candidates.end(),
                        [&](const auto& c) { return c.id == id; })) {
          out.push_back(id);
        }
      }
      return out;
    }
    st.next_redraw_tick = tick + period_ticks_;
    st.next_redraw_tick_valid = true;
    std::vector<RobotId> pool;
    for (const auto& c : in.candidates) pool.push_back(c.id);
    const int want = std::min<int>(in.q, static_cast<int>(pool.size()));
    for (int k = 0; k < want; ++k) {
      const std::size_t j = k + rng.below(pool.size() - k);
      std::swap(pool[k], pool[j]);
    }
    st.picks.assign(pool.begin(), pool.begin() + want);
    std::sort(st.picks.begin(), st.picks.end());
    return st.picks;
  }

  void reset() { state_.clear(); }

 private:
  struct State {
    bool next_redraw_tick_valid = false;
    std::int64_t next_redraw_tick = 0;
    std::vector<RobotId> picks;
  };
  std::int64_t period_ticks_;
  std::map<RobotId, State> state_;
};

namespace detail {

/// Posterior log-det after folding `subset` of this observer's candidate
/// measurements into the belief in ascending target order.
inline double subset_log_det(const JointBelief& b,
                             std::span<const RelativeMeasurement> candidates,
                             std::span<const RobotId> subset,
                             std::span<const double> headings,
                             std::span<const SensorParams> params) {
  std::vector<RelativeMeasurement> chosen;
  for (const RelativeMeasurement& m : candidates) {
    if (std::find(subset.begin(), subset.end(), m.target) != subset.end()) {
      chosen.push_back(m);
    }
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const auto& x, const auto& y) { return x.target < y.target; });
  auto [post, recs] = sequential_update(b, chosen, headings, params);
  return log_det_covariance(post);
}

}  // namespace detail

/// Centralized greedy oracle: at each step simulates a full joint update for
/// every remaining candidate and keeps the one with the lowest posterior
/// log-det.  Stops early once no candidate lowers it.  Ties go to the
/// smaller target id.
inline std::vector<RobotId> select_logdet_greedy(
    const JointBelief& b, RobotId observer,
    std::span<const RelativeMeasurement> candidates,
    std::span<const double> headings, std::span<const SensorParams> params,
    int q) {
  if (q < 0) throw std::invalid_argument("select_logdet_greedy: q < 0");
  std::vector<RelativeMeasurement> remaining(candidates.begin(),
                                             candidates.end());
  for (const auto& m : remaining) {
    if (m.observer != observer) {
      throw std::invalid_argument(
          "select_logdet_greedy: candidate from another observer");
    }
  }
  std::sort(remaining.begin(), remaining.end(),
            [](const auto& x, const auto& y) { return x.target < y.target; });
  std::vector<RobotId> out;
  JointBelief cur = b;
  double cur_logdet = log_det_covariance(cur);
  while (static_cast<int>(out.size()) < q && !remaining.empty()) {
    int best = -1;
    double best_logdet = cur_logdet;
    JointBelief best_post;
    for (int i = 0; i < static_cast<int>(remaining.size()); ++i) {
      auto [post, rec] = ekf_update_single(cur, remaining[i], headings, params);
      if (rec.logdet_after < best_logdet) {
        best = i;
        best_logdet = rec.logdet_after;
        best_post = std::move(post);
      }
    }
    if (best < 0) break;
    out.push_back(remaining[best].target);
    remaining.erase(remaining.begin() + best);
    cur = std::move(best_post);
    cur_logdet = best_logdet;
  }
  return out;
}

struct BruteForceResult {
  std::vector<RobotId> selection;  // ascending
  double log_det = 0.0;            // posterior log-det of that selection
};

/// Exhaustive oracle: evaluates every subset of size <= q through the same
/// ascending-order sequential update used everywhere else and returns the
/// minimizer.  Ties go to the lexicographically smallest id list.  Refuses
/// more than kBruteForceMaxCandidates candidates.
inline BruteForceResult select_brute_force(
    const JointBelief& b, RobotId observer,
    std::span<const RelativeMeasurement> candidates,
    std::span<const double> headings, std::span<const SensorParams> params,
    int q) {
  if (q < 0) throw std::invalid_argument("select_brute_force: q < 0");
  const int m = static_cast<int>(candidates.size());
  if (m > kBruteForceMaxCandidates) {
    throw std::invalid_argument(
        "select_brute_force: too many candidates for exhaustive search");
  }
  std::vector<RobotId> ids;
  for (const auto& c : candidates) {
    if (c.observer != observer) {
      throw std::invalid_argument(
          "select_brute_force: candidate from another observer");
    }
    ids.push_back(c.target);
  }
  std::sort(ids.begin(), ids.end());

  std::vector<std::vector<RobotId>> subsets;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (std::popcount(mask) > q) continue;
    std::vector<RobotId> subset;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) subset.push_back(ids[i]);
    }
    subsets.push_back(std::move(subset));
  }
  std::sort(subsets.begin(), subsets.end());

  BruteForceResult best;
  bool have = false;
  for (const auto& subset : subsets) {
    const double ld =
        detail::subset_log_det(b, candidates, subset, headings, params);
    if (!have || ld < best.log_det) {
      have = true;
      best.selection = subset;
      best.log_det = ld;
    }
  }
  return best;
}

/// What each observer saw and chose on one tick; `scores` aligns with
/// `candidates` and stays empty for policies that do not rank.
struct SelectionRecord {
  RobotId observer = 0;
  std::vector<RobotId> candidates;
  std::vector<RobotId> selected;
  std::vector<double> scores;
};

struct Schedule {
  std::int64_t timestep = 0;
  std::vector<SelectionRecord> records;  // ascending observer id
};

}  // namespace coopsched
