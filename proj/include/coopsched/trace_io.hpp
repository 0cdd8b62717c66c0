#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "coopsched/config.hpp"
#include "coopsched/harness.hpp"

namespace coopsched {

namespace detail {

inline std::string csv_number(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

template <typename Seq, typename Fmt>
inline std::string joined(const Seq& xs, Fmt fmt) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += ';';
    out += fmt(x);
  }
  return out;
}

}  // namespace detail

/// Writes `content` to `path` atomically: a sibling temp file is written,
/// flushed, then renamed over the target.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open for writing: " + tmp.string());
    }
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Per-tick, per-robot trace.  Row layout: tick-level values are repeated on
/// each robot's row; det_robot is det(P_ii); selected_ids lists the landmark
/// ids this robot selected as an observer this tick.
inline std::string trace_csv(const RunTrace& trace, int n_robots) {
  std::string out = "tick,time_s,logdet,rmse_agg,robot_id,det_robot,selected_ids\n";
  for (const TickRecord& rec : trace.ticks) {
    for (int i = 1; i <= n_robots; ++i) {
      std::string selected;
      for (const SelectionRecord& sel : rec.schedule.records) {
        if (sel.observer == i) {
          selected = detail::joined(sel.selected, [](RobotId id) {
            return std::to_string(id);
          });
          break;
        }
      }
      out += std::to_string(rec.tick);
      out += ',';
      out += detail::csv_number(rec.time_s);
      out += ',';
      out += detail::csv_number(rec.logdet);
      out += ',';
      out += detail::csv_number(rec.agg_sq_err);
      out += ',';
      out += std::to_string(i);
      out += ',';
      out += detail::csv_number(rec.det_robot[i - 1]);
      out += ',';
      out += selected;
      out += '\n';
    }
  }
  return out;
}

/// Per-selection log for downstream landmark-selection plots.
inline std::string selection_csv(const RunTrace& trace) {
  std::string out = "tick,observer,candidates,selected,scores\n";
  for (const TickRecord& rec : trace.ticks) {
    for (const SelectionRecord& sel : rec.schedule.records) {
      out += std::to_string(rec.tick);
      out += ',';
      out += std::to_string(sel.observer);
      out += ',';
      out += detail::joined(sel.candidates,
                            [](RobotId id) { return std::to_string(id); });
      out += ',';
      out += detail::joined(sel.selected,
                            [](RobotId id) { return std::to_string(id); });
      out += ',';
      out += detail::joined(sel.scores,
                            [](double s) { return detail::csv_number(s); });
      out += '\n';
    }
  }
  return out;
}

/// Aggregate of a Monte Carlo study: per-tick arrays plus the exact config
/// echo and master seed needed to reproduce it.
inline std::string aggregate_json(const AggregateTrace& agg,
                                  const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["runs"] = agg.runs;
  j["seed"] = agg.master_seed;
  j["validity_ok"] = agg.validity_ok;
  j["time_s"] = agg.time_s;
  j["log_mean_det"] = agg.log_mean_det;
  j["mean_rmse"] = agg.mean_rmse;
  j["config"] = serialize_config(cfg);
  return j.dump(2) + "\n";
}

}  // namespace coopsched
