#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coopsched/belief.hpp"
#include "coopsched/bounds.hpp"
#include "coopsched/scheduling.hpp"

namespace coopsched {

inline bool operator==(const SensorParams& a, const SensorParams& b) {
  return a.sigma_v_coeff == b.sigma_v_coeff &&
         a.sigma_v_floor == b.sigma_v_floor && a.sigma_omega == b.sigma_omega &&
         a.sigma_phi == b.sigma_phi && a.sigma_rho == b.sigma_rho &&
         a.sigma_theta == b.sigma_theta && a.v_max == b.v_max &&
         a.rho_max == b.rho_max && a.r_c == b.r_c;
}

/// One row of the measurement time table: observers allowed to measure while
/// t_begin < t <= t_end.
struct MeasurementWindow {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<RobotId> observers;  // ascending, may be empty

  bool operator==(const MeasurementWindow&) const = default;
};

/// Default measurement time table for the nine-robot study: nine contiguous
/// windows over [0, 100] s with hand-picked observer sets.
inline std::vector<MeasurementWindow> default_measurement_windows() {
  return {
      {0.0, 10.0, {}},
      {10.0, 20.0, {3, 5, 7, 9}},
      {20.0, 35.0, {2, 6, 8}},
      {35.0, 40.0, {1, 5, 7}},
      {40.0, 60.0, {3, 4, 6, 9}},
      {60.0, 65.0, {5, 7}},
      {65.0, 80.0, {3, 6, 8}},
      {80.0, 95.0, {1, 4, 9}},
      {95.0, 100.0, {4, 6}},
  };
}

/// Observer ids allowed to measure at time t, from the window containing t.
inline std::vector<RobotId> observers_at(
    const std::vector<MeasurementWindow>& windows, double t) {
  for (const MeasurementWindow& w : windows) {
    if (t > w.t_begin && t <= w.t_end) return w.observers;
  }
  return {};
}

/// Full description of a synthetic scenario.  Per-robot vectors are always
/// materialized to n_robots entries; sensor parameter sets carry their
/// derived r_c.
struct ScenarioConfig {
  int n_robots = 9;
  double dt = 0.1;            // s
  double duration = 100.0;    // s
  int runs = 50;              // Monte Carlo repetitions
  std::uint64_t seed = 1;
  PolicyKind policy = PolicyKind::greedy_trace;
  double v_cmd = 0.1;         // m/s commanded forward speed
  double omega_cmd = 0.1;     // rad/s commanded turn rate
  double mesh_spacing = 3.0;  // m between grid vertices at t = 0
  double init_var = 0.01;     // m^2 initial per-axis position variance
  double random_period_s = 30.0;  // random policy redraw period
  bool track_bound = false;       // maintain the conservative BoundState
  std::vector<SensorParams> sensors;   // size n_robots
  std::vector<int> q;                  // size n_robots
  std::vector<MeasurementWindow> windows = default_measurement_windows();

  bool operator==(const ScenarioConfig&) const = default;
};

/// Defaults for every field, with per-robot vectors materialized.
inline ScenarioConfig default_config() {
  ScenarioConfig c;
  c.sensors.assign(c.n_robots, finalize_sensor_params(SensorParams{}));
  c.q.assign(c.n_robots, 1);
  return c;
}

/// Initial true positions: a ceil(sqrt(N)) x ceil(sqrt(N)) grid with
/// `spacing` meters between adjacent vertices, filled row by row.
inline std::vector<Vec2> mesh_formation(int n, double spacing) {
  if (n < 1) throw std::invalid_argument("mesh_formation: n < 1");
  const int cols = static_cast<int>(std::ceil(std::sqrt(double(n))));
  std::vector<Vec2> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.emplace_back(spacing * (i % cols), spacing * (i / cols));
  }
  return out;
}

struct ConfigError : std::runtime_error {
  int line;
  ConfigError(int line_number, const std::string& message)
      : std::runtime_error("config line " + std::to_string(line_number) +
                           ": " + message),
        line(line_number) {}
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

inline double parse_double(std::string_view v, int line) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError(line, "expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

template <typename Int>
inline Int parse_int(std::string_view v, int line) {
  Int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError(line, "expected an integer, got '" + std::string(v) +
                                "'");
  }
  return out;
}

inline bool parse_bool(std::string_view v, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(line, "expected true/false, got '" + std::string(v) + "'");
}

inline std::vector<RobotId> parse_id_list(std::string_view v, int line) {
  std::vector<RobotId> ids;
  if (v == "none") return ids;
  std::size_t pos = 0;
  while (pos < v.size()) {
    while (pos < v.size() &&
           std::isspace(static_cast<unsigned char>(v[pos]))) {
      ++pos;
    }
    if (pos >= v.size()) break;
    std::size_t end = pos;
    while (end < v.size() &&
           !std::isspace(static_cast<unsigned char>(v[end]))) {
      ++end;
    }
    ids.push_back(parse_int<RobotId>(v.substr(pos, end - pos), line));
    pos = end;
  }
  return ids;
}

inline std::string format_double(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

}  // namespace detail

/// Throws std::invalid_argument when any invariant is broken.
inline void validate_config(const ScenarioConfig& c) {
  auto fail = [](const std::string& m) {
    throw std::invalid_argument("config: " + m);
  };
  if (c.n_robots < 1) fail("robots must be >= 1");
  if (!(c.dt > 0.0)) fail("dt must be > 0");
  if (!(c.duration >= 0.0)) fail("duration must be >= 0");
  if (c.runs < 1) fail("runs must be >= 1");
  if (!(c.v_cmd == c.v_cmd) || !(c.omega_cmd == c.omega_cmd)) fail("NaN speed");
  if (!(c.mesh_spacing > 0.0)) fail("mesh_spacing must be > 0");
  if (!(c.init_var > 0.0)) fail("init_var must be > 0");
  if (!(c.random_period_s > 0.0)) fail("random_period_s must be > 0");
  if (static_cast<int>(c.sensors.size()) != c.n_robots ||
      static_cast<int>(c.q.size()) != c.n_robots) {
    fail("per-robot vectors must have exactly 'robots' entries");
  }
  for (int i = 0; i < c.n_robots; ++i) {
    const SensorParams& p = c.sensors[i];
    const std::string who = " (robot " + std::to_string(i + 1) + ")";
    if (c.q[i] < 0) fail("q must be >= 0" + who);
    if (p.sigma_v_coeff < 0 || p.sigma_v_floor < 0 || p.sigma_omega < 0 ||
        p.sigma_phi < 0 || p.sigma_rho < 0 || p.sigma_theta < 0) {
      fail("standard deviations must be >= 0" + who);
    }
    if (!(p.v_max > 0.0)) fail("v_max must be > 0" + who);
    if (!(p.rho_max > 0.0)) fail("rho_max must be > 0" + who);
    if (p.r_c != r_scalar_bound(p)) fail("r_c inconsistent with its formula" + who);
  }
  for (std::size_t i = 0; i < c.windows.size(); ++i) {
    const MeasurementWindow& w = c.windows[i];
    if (!(w.t_begin >= 0.0) || !(w.t_begin < w.t_end) ||
        !(w.t_end <= c.duration)) {
      fail("window (" + detail::format_double(w.t_begin) + "," +
           detail::format_double(w.t_end) + "] outside [0, duration]");
    }
    std::vector<RobotId> ids = w.observers;
    std::sort(ids.begin(), ids.end());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] < 1 || ids[k] > c.n_robots) fail("window observer id out of range");
      if (k > 0 && ids[k] == ids[k - 1]) fail("duplicate observer in window");
    }
    for (std::size_t j = i + 1; j < c.windows.size(); ++j) {
      if (std::max(w.t_begin, c.windows[j].t_begin) <
          std::min(w.t_end, c.windows[j].t_end)) {
        fail("windows overlap");
      }
    }
  }
}

/// Parses the `key = value` scenario grammar:
///   - bare keys set scalar fields or all robots' sensor parameters;
///   - `[robot i]` opens a section whose keys apply to robot i only;
///   - a row `(a,b] = 3 5 7 9` (or `= none`) replaces the default window
///     table (first such row clears it);
///   - `windows = none` empties the table;
///   - `#` starts a comment.
/// An empty file parses to the full default configuration.
inline ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig c = default_config();
  bool windows_replaced = false;
  int robot_section = 0;  // 0 = global
  bool robots_key_seen = false;
  bool per_robot_value_seen = false;

  auto resize_robots = [&](int n, int line) {
    if (n < 1) throw ConfigError(line, "robots must be >= 1");
    if (per_robot_value_seen) {
      throw ConfigError(line,
                        "'robots' must appear before any per-robot value");
    }
    c.n_robots = n;
    c.sensors.assign(n, finalize_sensor_params(SensorParams{}));
    c.q.assign(n, 1);
  };

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "unterminated section");
      std::string_view inner = detail::trim(line.substr(1, line.size() - 2));
      if (!inner.starts_with("robot")) {
        throw ConfigError(line_no, "unknown section '" + std::string(inner) + "'");
      }
      const int id = detail::parse_int<int>(detail::trim(inner.substr(5)), line_no);
      if (id < 1 || id > c.n_robots) {
        throw ConfigError(line_no, "robot id out of range in section header");
      }
      robot_section = id;
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(line_no, "expected 'key = value'");
    }
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));

    if (!key.empty() && key.front() == '(') {  // window table row
      if (robot_section != 0) {
        throw ConfigError(line_no, "window rows belong to the global section");
      }
      const std::size_t comma = key.find(',');
      if (comma == std::string_view::npos || key.back() != ']') {
        throw ConfigError(line_no, "window interval must look like (a,b]");
      }
      MeasurementWindow w;
      w.t_begin = detail::parse_double(
          detail::trim(key.substr(1, comma - 1)), line_no);
      w.t_end = detail::parse_double(
          detail::trim(key.substr(comma + 1, key.size() - comma - 2)), line_no);
      w.observers = detail::parse_id_list(value, line_no);
      if (!windows_replaced) {
        c.windows.clear();
        windows_replaced = true;
      }
      c.windows.push_back(std::move(w));
      continue;
    }

    auto set_sensor = [&](auto member) {
      per_robot_value_seen = per_robot_value_seen || robot_section != 0;
      const double x = detail::parse_double(value, line_no);
      if (robot_section == 0) {
        for (SensorParams& p : c.sensors) p.*member = x;
      } else {
        c.sensors[robot_section - 1].*member = x;
      }
      per_robot_value_seen = true;
    };

    if (key == "robots") {
      if (robot_section != 0) {
        throw ConfigError(line_no, "'robots' belongs to the global section");
      }
      if (robots_key_seen) throw ConfigError(line_no, "'robots' given twice");
      robots_key_seen = true;
      resize_robots(detail::parse_int<int>(value, line_no), line_no);
    } else if (key == "q") {
      const int q = detail::parse_int<int>(value, line_no);
      if (robot_section == 0) {
        std::fill(c.q.begin(), c.q.end(), q);
      } else {
        c.q[robot_section - 1] = q;
      }
      per_robot_value_seen = true;
    } else if (key == "sigma_v_coeff") {
      set_sensor(&SensorParams::sigma_v_coeff);
    } else if (key == "sigma_v_floor") {
      set_sensor(&SensorParams::sigma_v_floor);
    } else if (key == "sigma_omega") {
      set_sensor(&SensorParams::sigma_omega);
    } else if (key == "sigma_phi") {
      set_sensor(&SensorParams::sigma_phi);
    } else if (key == "sigma_rho") {
      set_sensor(&SensorParams::sigma_rho);
    } else if (key == "sigma_theta") {
      set_sensor(&SensorParams::sigma_theta);
    } else if (key == "v_max") {
      set_sensor(&SensorParams::v_max);
    } else if (key == "rho_max") {
      set_sensor(&SensorParams::rho_max);
    } else if (robot_section != 0) {
      throw ConfigError(line_no, "key '" + std::string(key) +
                                     "' not allowed in a robot section");
    } else if (key == "dt") {
      c.dt = detail::parse_double(value, line_no);
    } else if (key == "duration") {
      c.duration = detail::parse_double(value, line_no);
    } else if (key == "runs") {
      c.runs = detail::parse_int<int>(value, line_no);
    } else if (key == "seed") {
      c.seed = detail::parse_int<std::uint64_t>(value, line_no);
    } else if (key == "policy") {
      const auto p = parse_policy(value);
      if (!p) throw ConfigError(line_no, "unknown policy '" + std::string(value) + "'");
      c.policy = *p;
    } else if (key == "v_cmd") {
      c.v_cmd = detail::parse_double(value, line_no);
    } else if (key == "omega_cmd") {
      c.omega_cmd = detail::parse_double(value, line_no);
    } else if (key == "mesh_spacing") {
      c.mesh_spacing = detail::parse_double(value, line_no);
    } else if (key == "init_var") {
      c.init_var = detail::parse_double(value, line_no);
    } else if (key == "random_period_s") {
      c.random_period_s = detail::parse_double(value, line_no);
    } else if (key == "track_bound") {
      c.track_bound = detail::parse_bool(value, line_no);
    } else if (key == "windows") {
      if (detail::trim(value) != "none") {
        throw ConfigError(line_no, "'windows' only accepts 'none'");
      }
      c.windows.clear();
      windows_replaced = true;
    } else {
      throw ConfigError(line_no, "unknown key '" + std::string(key) + "'");
    }
  }

  // Sensor values may have changed after defaults were materialized.
  for (SensorParams& p : c.sensors) p = finalize_sensor_params(p);
  try {
    validate_config(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(line_no, e.what());
  }
  return c;
}

/// Canonical text form: global scalars, the window table, then one explicit
/// section per robot.  parse_config(serialize_config(c)) == c for every
/// valid config.
inline std::string serialize_config(const ScenarioConfig& c) {
  using detail::format_double;
  std::string out;
  auto kv = [&](std::string_view k, const std::string& v) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  };
  kv("robots", std::to_string(c.n_robots));
  kv("dt", format_double(c.dt));
  kv("duration", format_double(c.duration));
  kv("runs", std::to_string(c.runs));
  kv("seed", std::to_string(c.seed));
  kv("policy", to_string(c.policy));
  kv("v_cmd", format_double(c.v_cmd));
  kv("omega_cmd", format_double(c.omega_cmd));
  kv("mesh_spacing", format_double(c.mesh_spacing));
  kv("init_var", format_double(c.init_var));
  kv("random_period_s", format_double(c.random_period_s));
  kv("track_bound", c.track_bound ? "true" : "false");
  if (c.windows.empty()) {
    kv("windows", "none");
  } else {
    for (const MeasurementWindow& w : c.windows) {
      std::string ids;
      for (RobotId id : w.observers) {
        if (!ids.empty()) ids += ' ';
        ids += std::to_string(id);
      }
      kv("(" + format_double(w.t_begin) + "," + format_double(w.t_end) + "]",
         ids.empty() ? "none" : ids);
    }
  }
  for (int i = 1; i <= c.n_robots; ++i) {
    const SensorParams& p = c.sensors[i - 1];
    out += "[robot " + std::to_string(i) + "]\n";
    kv("q", std::to_string(c.q[i - 1]));
    kv("sigma_v_coeff", format_double(p.sigma_v_coeff));
    kv("sigma_v_floor", format_double(p.sigma_v_floor));
    kv("sigma_omega", format_double(p.sigma_omega));
    kv("sigma_phi", format_double(p.sigma_phi));
    kv("sigma_rho", format_double(p.sigma_rho));
    kv("sigma_theta", format_double(p.sigma_theta));
    kv("v_max", format_double(p.v_max));
    kv("rho_max", format_double(p.rho_max));
  }
  return out;
}

}  // namespace coopsched
