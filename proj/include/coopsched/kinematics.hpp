#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "coopsched/belief.hpp"
#include "coopsched/linalg.hpp"
#include "coopsched/rng.hpp"

namespace coopsched {

/// One tick of measured self-motion: measured speed, measured heading, and
/// the step length they apply over.
struct OdometryReading {
  double v_m = 0.0;    // m/s, clamped to [-v_max, v_max]
  double phi_m = 0.0;  // rad, [0, 2*pi)
  double dt = 0.0;     // s, > 0
};

/// Unicycle truth step: move dt at speed v along the current heading, then
/// turn by omega * dt.
inline RobotTruth step_truth(const RobotTruth& s, double v, double omega,
                             double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_truth: dt must be > 0");
  RobotTruth out;
  out.position = s.position + dt * v * Vec2{std::cos(s.heading),
                                            std::sin(s.heading)};
  out.heading = normalize_heading(s.heading + omega * dt);
  return out;
}

/// Noisy encoder + compass sample of the current motion.  The encoder value
/// saturates at +/- v_max: the motion model's constant bound (bounds.hpp) is
/// evaluated at v_max, so a reading outside that range would make the bound
/// unsound, and real encoders clip at their rated speed anyway.
inline OdometryReading synthesize_odometry(const RobotTruth& s, double v,
                                           double dt, const SensorParams& p,
                                           Stream& rng) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("synthesize_odometry: dt must be > 0");
  }
  OdometryReading r;
  r.dt = dt;
  const double v_noisy = v + rng.normal(0.0, p.sigma_v(v));
  r.v_m = std::clamp(v_noisy, -p.v_max, p.v_max);
  r.phi_m = normalize_heading(s.heading + rng.normal(0.0, p.sigma_phi));
  return r;
}

/// Dead-reckoning position propagation along the measured heading.
inline Vec2 propagate_estimate(const Vec2& est, const OdometryReading& o) {
  return est + o.dt * o.v_m * Vec2{std::cos(o.phi_m), std::sin(o.phi_m)};
}

/// Per-tick covariance increment
///   Q = dt^2 * C(phi_m) diag(sigma_v(v_m)^2, v_m^2 sigma_phi^2) C(phi_m)^T,
/// i.e. encoder noise along the measured heading, heading noise across it.
inline Mat2 process_noise_increment(const OdometryReading& o,
                                    const SensorParams& p) {
  const double sv = p.sigma_v(o.v_m);
  const double d0 = sv * sv;
  const double d1 = (o.v_m * p.sigma_phi) * (o.v_m * p.sigma_phi);
  return (o.dt * o.dt) * rotated_diag(o.phi_m, d0, d1);
}

/// Joint covariance propagation: each robot adds its own increment on the
/// diagonal; cross blocks are untouched (dead reckoning is uncorrelated
/// across robots).  Estimates are not moved here; combine with
/// propagate_estimate per robot.  Advances the belief timestep.
inline JointBelief propagate_covariance(JointBelief b,
                                        std::span<const Mat2> increments) {
  if (static_cast<int>(increments.size()) != b.n_robots()) {
    throw std::invalid_argument(
        "propagate_covariance: one increment per robot required");
  }
  for (int i = 1; i <= b.n_robots(); ++i) {
    const Mat2& q = increments[i - 1];
    if (!is_psd_2x2(q, 1e-12)) {
      throw std::invalid_argument("propagate_covariance: increment not PSD");
    }
    b.set_block(i, i, Mat2(b.block(i, i) + q));
  }
  b.advance_timestep();
  return b;
}

/// Full per-robot propagation used by the simulation loop: estimates move by
/// dead reckoning, covariance grows by each robot's increment.
inline JointBelief propagate_belief(JointBelief b,
                                    std::span<const OdometryReading> odo,
                                    std::span<const SensorParams> params) {
  const int n = b.n_robots();
  if (static_cast<int>(odo.size()) != n ||
      static_cast<int>(params.size()) != n) {
    throw std::invalid_argument("propagate_belief: per-robot inputs required");
  }
  std::vector<Mat2> increments(n);
  for (int i = 1; i <= n; ++i) {
    b.estimate(i) = propagate_estimate(b.estimate(i), odo[i - 1]);
    increments[i - 1] = process_noise_increment(odo[i - 1], params[i - 1]);
  }
  return propagate_covariance(std::move(b), increments);
}

}  // namespace coopsched
