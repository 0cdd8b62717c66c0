#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "coopsched/belief.hpp"
#include "coopsched/linalg.hpp"
#include "coopsched/rng.hpp"

namespace coopsched {

/// Planar rotation C(phi): columns are the body axes expressed in the world
/// frame; C(phi)^T maps world vectors into the body frame.
inline Mat2 rotation_matrix(double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  Mat2 m;
  m << c, -s, s, c;
  return m;
}

/// One relative observation: robot `observer` saw robot `target` at range
/// `range` and body-frame bearing `bearing`.  `z` is the equivalent relative
/// position in the observer's body frame, z = range * (cos b, sin b).
struct RelativeMeasurement {
  RobotId observer = 0;
  RobotId target = 0;
  std::int64_t timestep = 0;
  double range = 0.0;    // measured, >= 0, <= rho_max
  double bearing = 0.0;  // measured, rad
  Vec2 z{0.0, 0.0};

  static RelativeMeasurement from_range_bearing(RobotId observer,
                                                RobotId target,
                                                std::int64_t timestep,
                                                double range, double bearing) {
    if (observer == target) {
      throw std::invalid_argument("RelativeMeasurement: self-measurement");
    }
    if (!(range >= 0.0)) {
      throw std::invalid_argument("RelativeMeasurement: negative range");
    }
    RelativeMeasurement m;
    m.observer = observer;
    m.target = target;
    m.timestep = timestep;
    m.range = range;
    m.bearing = bearing;
    m.z = range * Vec2{std::cos(bearing), std::sin(bearing)};
    return m;
  }
};

/// Noisy range-bearing observation of robot b from robot a, or nullopt when b
/// is out of sensing range.  The noisy range is clipped to [0, rho_max]: the
/// sensor cannot report beyond its rated range, and the scheduling bound
/// r_c is only valid for in-range readings.
inline std::optional<RelativeMeasurement> generate_measurement(
    RobotId a_id, const RobotTruth& a, RobotId b_id, const RobotTruth& b,
    std::int64_t timestep, const SensorParams& p, Stream& rng) {
  const Vec2 d = b.position - a.position;
  const double true_range = d.norm();
  if (true_range > p.rho_max) return std::nullopt;
  const double true_bearing = std::atan2(d[1], d[0]) - a.heading;
  const double range = std::clamp(true_range + rng.normal(0.0, p.sigma_rho),
                                  0.0, p.rho_max);
  const double bearing = true_bearing + rng.normal(0.0, p.sigma_theta);
  return RelativeMeasurement::from_range_bearing(a_id, b_id, timestep, range,
                                                 bearing);
}

/// Linearized measurement terms at the current estimates, using the
/// observer's measured heading phi_m_a for the world-to-body rotation.
struct InnovationTerms {
  Vec2 innovation{0.0, 0.0};  // z - C(phi_m_a)^T (est_b - est_a)
  Mat2 h_observer;            // -C(phi_m_a)^T
  Mat2 h_target;              // +C(phi_m_a)^T
};

inline InnovationTerms innovation_and_jacobians(const RelativeMeasurement& m,
                                                const Vec2& est_observer,
                                                const Vec2& est_target,
                                                double phi_m_a) {
  InnovationTerms t;
  const Mat2 c_t = rotation_matrix(phi_m_a).transpose();
  t.innovation = m.z - c_t * (est_target - est_observer);
  t.h_target = c_t;
  t.h_observer = -c_t;
  return t;
}

/// Measurement-noise covariance split into the range-bearing part R_z and
/// the compass-induced part R_phi, both in the observer's body frame.
///
///   R_z   = C(theta_m) diag(sigma_rho^2, (range * sigma_theta)^2) C(theta_m)^T
///   R_phi = sigma_phi^2 * C(phi_m_a)^T (J d) (J d)^T C(phi_m_a),
///           d = est_target - est_observer,  J = [[0, 1], [-1, 0]].
struct MeasurementNoise {
  Mat2 r_z;
  Mat2 r_phi;
};

inline MeasurementNoise measurement_noise_covariance(
    const RelativeMeasurement& m, const Vec2& est_observer,
    const Vec2& est_target, double phi_m_a, const SensorParams& p) {
  MeasurementNoise out;
  out.r_z = rotated_diag(m.bearing, p.sigma_rho * p.sigma_rho,
                         (m.range * p.sigma_theta) * (m.range * p.sigma_theta));
  const Vec2 d = est_target - est_observer;
  const Vec2 jd{d[1], -d[0]};
  const Mat2 c_t = rotation_matrix(phi_m_a).transpose();
  out.r_phi = p.sigma_phi * p.sigma_phi * outer_sym(c_t * jd);
  return out;
}

/// Innovation covariance from the four covariance blocks touching the pair:
///   S = H_a P_aa H_a^T + H_a P_ab H_b^T + H_b P_ba H_a^T + H_b P_bb H_b^T
///       + R_z + R_phi.
inline Mat2 innovation_covariance(const Mat2& h_a, const Mat2& h_b,
                                  const Mat2& p_aa, const Mat2& p_ab,
                                  const Mat2& p_ba, const Mat2& p_bb,
                                  const Mat2& r_z, const Mat2& r_phi) {
  Mat2 s = h_a * p_aa * h_a.transpose() + h_a * p_ab * h_b.transpose() +
           h_b * p_ba * h_a.transpose() + h_b * p_bb * h_b.transpose() + r_z +
           r_phi;
  return Mat2((s + s.transpose()) / 2.0);
}

}  // namespace coopsched
