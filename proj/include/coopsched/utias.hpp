#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coopsched/belief.hpp"
#include "coopsched/linalg.hpp"

namespace coopsched {

/// Multi-robot dataset ingestion.  Directory layout (whitespace-separated
/// columns, `#` comments):
///   Barcodes.dat                subject barcode
///   Landmark_Groundtruth.dat    subject x y x_std y_std
///   Robot<i>_Odometry.dat       t v omega          (strictly increasing t)
///   Robot<i>_Measurement.dat    t barcode range bearing (non-decreasing t)
///   Robot<i>_Groundtruth.dat    t x y phi          (strictly increasing t)
/// Robots are numbered 1..R consecutively; subjects 1..R are robots, higher
/// subjects are static landmarks.

struct OdometryRecord {
  double t = 0.0, v = 0.0, omega = 0.0;
  bool operator==(const OdometryRecord&) const = default;
};

struct MeasurementRecord {
  double t = 0.0;
  int barcode = 0;
  double range = 0.0, bearing = 0.0;
  bool operator==(const MeasurementRecord&) const = default;
};

struct GroundtruthRecord {
  double t = 0.0, x = 0.0, y = 0.0, phi = 0.0;
  bool operator==(const GroundtruthRecord&) const = default;
};

struct LandmarkRecord {
  int subject = 0;
  double x = 0.0, y = 0.0, x_std = 0.0, y_std = 0.0;
  bool operator==(const LandmarkRecord&) const = default;
};

struct DatasetBundle {
  std::vector<std::vector<OdometryRecord>> odometry;       // [robot-1]
  std::vector<std::vector<MeasurementRecord>> measurements;  // [robot-1]
  std::vector<std::vector<GroundtruthRecord>> groundtruth;   // [robot-1]
  std::map<int, int> barcode_to_subject;
  std::vector<LandmarkRecord> landmarks;
  int dropped_measurements = 0;  // rows whose barcode resolves to nothing

  int n_robots() const { return static_cast<int>(odometry.size()); }

  std::optional<int> subject_of(int barcode) const {
    const auto it = barcode_to_subject.find(barcode);
    if (it == barcode_to_subject.end()) return std::nullopt;
    return it->second;
  }

  bool is_robot_subject(int subject) const {
    return subject >= 1 && subject <= n_robots();
  }

  bool operator==(const DatasetBundle& o) const {
    return odometry == o.odometry && measurements == o.measurements &&
           groundtruth == o.groundtruth &&
           barcode_to_subject == o.barcode_to_subject &&
           landmarks == o.landmarks;
  }
};

namespace detail {

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<std::vector<std::string>> read_columns(
    const std::filesystem::path& file, std::size_t n_columns) {
  std::ifstream in(file);
  if (!in) throw DatasetError("dataset: missing file " + file.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    std::vector<std::string> cols;
    std::size_t p = 0;
    while (p < line.size()) {
      while (p < line.size() && std::isspace(static_cast<unsigned char>(line[p]))) ++p;
      std::size_t e = p;
      while (e < line.size() && !std::isspace(static_cast<unsigned char>(line[e]))) ++e;
      if (e > p) cols.push_back(line.substr(p, e - p));
      p = e;
    }
    if (cols.empty()) continue;
    if (cols.size() != n_columns) {
      throw DatasetError("dataset: " + file.string() + " line " +
                         std::to_string(line_no) + ": expected " +
                         std::to_string(n_columns) + " columns, got " +
                         std::to_string(cols.size()));
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

inline double to_double(const std::string& s, const std::filesystem::path& f) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw DatasetError("dataset: " + f.string() + ": bad number '" + s + "'");
  }
  return out;
}

inline int to_int(const std::string& s, const std::filesystem::path& f) {
  int out = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw DatasetError("dataset: " + f.string() + ": bad integer '" + s + "'");
  }
  return out;
}

inline void require_time_order(const std::filesystem::path& f,
                               double prev, double cur, bool strict,
                               std::size_t row) {
  if (strict ? !(cur > prev) : !(cur >= prev)) {
    throw DatasetError("dataset: " + f.string() + " record " +
                       std::to_string(row) + ": timestamps out of order");
  }
}

inline std::string format_number(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

}  // namespace detail

inline DatasetBundle load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  DatasetBundle b;
  if (!fs::is_directory(dir)) {
    throw detail::DatasetError("dataset: not a directory: " + dir.string());
  }

  const fs::path barcodes = dir / "Barcodes.dat";
  for (const auto& row : detail::read_columns(barcodes, 2)) {
    b.barcode_to_subject[detail::to_int(row[1], barcodes)] =
        detail::to_int(row[0], barcodes);
  }

  const fs::path landmark_file = dir / "Landmark_Groundtruth.dat";
  for (const auto& row : detail::read_columns(landmark_file, 5)) {
    b.landmarks.push_back({detail::to_int(row[0], landmark_file),
                           detail::to_double(row[1], landmark_file),
                           detail::to_double(row[2], landmark_file),
                           detail::to_double(row[3], landmark_file),
                           detail::to_double(row[4], landmark_file)});
  }

  for (int robot = 1;; ++robot) {
    const fs::path odo_file = dir / ("Robot" + std::to_string(robot) + "_Odometry.dat");
    if (!fs::exists(odo_file)) {
      if (robot == 1) throw detail::DatasetError("dataset: missing file " + odo_file.string());
      break;
    }
    const fs::path meas_file = dir / ("Robot" + std::to_string(robot) + "_Measurement.dat");
    const fs::path gt_file = dir / ("Robot" + std::to_string(robot) + "_Groundtruth.dat");

    std::vector<OdometryRecord> odo;
    for (const auto& row : detail::read_columns(odo_file, 3)) {
      OdometryRecord r{detail::to_double(row[0], odo_file),
                       detail::to_double(row[1], odo_file),
                       detail::to_double(row[2], odo_file)};
      if (!odo.empty()) {
        detail::require_time_order(odo_file, odo.back().t, r.t, true, odo.size() + 1);
      }
      odo.push_back(r);
    }

    std::vector<MeasurementRecord> meas;
    for (const auto& row : detail::read_columns(meas_file, 4)) {
      MeasurementRecord r{detail::to_double(row[0], meas_file),
                          detail::to_int(row[1], meas_file),
                          detail::to_double(row[2], meas_file),
                          detail::to_double(row[3], meas_file)};
      if (!meas.empty()) {
        detail::require_time_order(meas_file, meas.back().t, r.t, false, meas.size() + 1);
      }
      if (!b.subject_of(r.barcode)) {
        ++b.dropped_measurements;
        continue;
      }
      meas.push_back(r);
    }

    std::vector<GroundtruthRecord> gt;
    for (const auto& row : detail::read_columns(gt_file, 4)) {
      GroundtruthRecord r{detail::to_double(row[0], gt_file),
                          detail::to_double(row[1], gt_file),
                          detail::to_double(row[2], gt_file),
                          detail::to_double(row[3], gt_file)};
      if (!gt.empty()) {
        detail::require_time_order(gt_file, gt.back().t, r.t, true, gt.size() + 1);
      }
      gt.push_back(r);
    }

    b.odometry.push_back(std::move(odo));
    b.measurements.push_back(std::move(meas));
    b.groundtruth.push_back(std::move(gt));
  }
  return b;
}

/// Writes a bundle back out in the directory layout load_dataset reads.
/// Numbers use shortest-round-trip formatting, so load(serialize(b)) == b.
inline void serialize_dataset(const DatasetBundle& b,
                              const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw detail::DatasetError("dataset: cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("Barcodes.dat");
    for (const auto& [barcode, subject] : b.barcode_to_subject) {
      out << subject << ' ' << barcode << '\n';
    }
  }
  {
    auto out = open("Landmark_Groundtruth.dat");
    for (const LandmarkRecord& l : b.landmarks) {
      out << l.subject << ' ' << detail::format_number(l.x) << ' '
          << detail::format_number(l.y) << ' ' << detail::format_number(l.x_std)
          << ' ' << detail::format_number(l.y_std) << '\n';
    }
  }
  for (int robot = 1; robot <= b.n_robots(); ++robot) {
    {
      auto out = open("Robot" + std::to_string(robot) + "_Odometry.dat");
      for (const OdometryRecord& r : b.odometry[robot - 1]) {
        out << detail::format_number(r.t) << ' ' << detail::format_number(r.v)
            << ' ' << detail::format_number(r.omega) << '\n';
      }
    }
    {
      auto out = open("Robot" + std::to_string(robot) + "_Measurement.dat");
      for (const MeasurementRecord& r : b.measurements[robot - 1]) {
        out << detail::format_number(r.t) << ' ' << r.barcode << ' '
            << detail::format_number(r.range) << ' '
            << detail::format_number(r.bearing) << '\n';
      }
    }
    {
      auto out = open("Robot" + std::to_string(robot) + "_Groundtruth.dat");
      for (const GroundtruthRecord& r : b.groundtruth[robot - 1]) {
        out << detail::format_number(r.t) << ' ' << detail::format_number(r.x)
            << ' ' << detail::format_number(r.y) << ' '
            << detail::format_number(r.phi) << '\n';
      }
    }
  }
}

/// One robot-to-robot measurement assigned to a grid tick.
struct GriddedMeasurement {
  RobotId observer = 0;
  RobotId target = 0;
  double range = 0.0;
  double bearing = 0.0;
  double t_raw = 0.0;  // original stamp, used for nearest-wins dedup
};

/// Replay inputs for one grid tick (arrays indexed robot-1).
struct ReplayTick {
  std::vector<double> v;             // zero-order-held commanded speed
  std::vector<double> omega;         // zero-order-held turn rate (unused by the filter)
  std::vector<double> heading_true;  // interpolated groundtruth heading
  std::vector<Vec2> position_true;   // interpolated groundtruth position
  std::vector<GriddedMeasurement> measurements;
};

struct GriddedReplay {
  double t0 = 0.0;
  double dt = 0.0;
  int n_robots = 0;
  std::vector<ReplayTick> ticks;  // index k = 0..K, sampled at t0 + k * dt;
                                  // index 0 is the initial state and never
                                  // carries measurements

  std::int64_t grid_ticks() const {
    return static_cast<std::int64_t>(ticks.size()) - 1;
  }
};

namespace detail {

inline double interp_angle(double a, double b, double w) {
  double diff = std::remainder(b - a, 2.0 * std::numbers::pi);
  return normalize_heading(a + w * diff);
}

}  // namespace detail

/// Resamples a bundle onto the simulation grid: K = round(duration/dt) ticks
/// at t0 + k*dt.  Odometry is zero-order held, groundtruth linearly
/// interpolated (headings along the shortest arc), and each robot-to-robot
/// measurement lands on its nearest tick within dt/2 — at most one record
/// per (observer, target, tick), nearest in time wins.  Static-landmark
/// measurements are excluded.  Throws when [t0, t0+duration] is not covered
/// by every robot's odometry and groundtruth series.
inline GriddedReplay resample_to_grid(const DatasetBundle& b, double t0,
                                      double duration, double dt) {
  if (!(duration > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("resample_to_grid: need duration > 0, dt > 0");
  }
  const int n = b.n_robots();
  const auto ticks = static_cast<std::int64_t>(std::llround(duration / dt));
  if (ticks < 1) throw std::invalid_argument("resample_to_grid: empty grid");
  const double t_end = t0 + static_cast<double>(ticks) * dt;

  for (int r = 0; r < n; ++r) {
    const auto& odo = b.odometry[r];
    const auto& gt = b.groundtruth[r];
    if (odo.empty() || gt.empty() || odo.front().t > t0 || odo.back().t < t_end ||
        gt.front().t > t0 || gt.back().t < t_end) {
      throw std::invalid_argument(
          "resample_to_grid: window outside data range for robot " +
          std::to_string(r + 1));
    }
  }

  GriddedReplay out;
  out.t0 = t0;
  out.dt = dt;
  out.n_robots = n;
  out.ticks.resize(ticks + 1);

  for (std::int64_t k = 0; k <= ticks; ++k) {
    ReplayTick& tk = out.ticks[k];
    const double t = t0 + static_cast<double>(k) * dt;
    tk.v.resize(n);
    tk.omega.resize(n);
    tk.heading_true.resize(n);
    tk.position_true.resize(n);
    for (int r = 0; r < n; ++r) {
      const auto& odo = b.odometry[r];
      auto it = std::upper_bound(
          odo.begin(), odo.end(), t,
          [](double value, const OdometryRecord& rec) { return value < rec.t; });
      const OdometryRecord& rec = it == odo.begin() ? odo.front() : *(it - 1);
      tk.v[r] = rec.v;
      tk.omega[r] = rec.omega;

      const auto& gt = b.groundtruth[r];
      auto git = std::lower_bound(
          gt.begin(), gt.end(), t,
          [](const GroundtruthRecord& rec2, double value) { return rec2.t < value; });
      if (git == gt.begin()) {
        tk.position_true[r] = Vec2{git->x, git->y};
        tk.heading_true[r] = normalize_heading(git->phi);
      } else if (git == gt.end()) {
        tk.position_true[r] = Vec2{(git - 1)->x, (git - 1)->y};
        tk.heading_true[r] = normalize_heading((git - 1)->phi);
      } else {
        const GroundtruthRecord& hi = *git;
        const GroundtruthRecord& lo = *(git - 1);
        const double w = hi.t == lo.t ? 0.0 : (t - lo.t) / (hi.t - lo.t);
        tk.position_true[r] =
            Vec2{lo.x + w * (hi.x - lo.x), lo.y + w * (hi.y - lo.y)};
        tk.heading_true[r] = detail::interp_angle(lo.phi, hi.phi, w);
      }
    }
  }

  for (int r = 0; r < n; ++r) {
    for (const MeasurementRecord& m : b.measurements[r]) {
      const auto subject = b.subject_of(m.barcode);
      if (!subject || !b.is_robot_subject(*subject) || *subject == r + 1) {
        continue;  // static landmark (or self-sighting): not replayed
      }
      const auto k = static_cast<std::int64_t>(std::llround((m.t - t0) / dt));
      if (k < 1 || k > ticks) continue;
      const double tick_time = t0 + static_cast<double>(k) * dt;
      if (std::abs(m.t - tick_time) > dt / 2.0) continue;
      auto& slot = out.ticks[k].measurements;
      const GriddedMeasurement g{r + 1, *subject, m.range, m.bearing, m.t};
      auto existing = std::find_if(slot.begin(), slot.end(), [&](const auto& e) {
        return e.observer == g.observer && e.target == g.target;
      });
      if (existing == slot.end()) {
        slot.push_back(g);
      } else if (std::abs(g.t_raw - tick_time) <
                 std::abs(existing->t_raw - tick_time)) {
        *existing = g;
      }
    }
  }
  for (auto& tk : out.ticks) {
    std::sort(tk.measurements.begin(), tk.measurements.end(),
              [](const auto& a, const auto& b2) {
                return a.observer != b2.observer ? a.observer < b2.observer
                                                 : a.target < b2.target;
              });
  }
  return out;
}

}  // namespace coopsched
