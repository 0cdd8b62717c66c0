#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "coopsched/belief.hpp"
#include "coopsched/linalg.hpp"
#include "coopsched/sensing.hpp"

namespace coopsched {

/// Condition-number ceiling for inverting the 2x2 innovation covariance.
inline constexpr double kMaxInnovationCondition = 1e12;

enum class SkipReason {
  none,
  range_gate,        // predicted separation beyond the observer's rho_max
  ill_conditioned,   // innovation covariance not safely invertible
};

inline const char* to_string(SkipReason r) {
  switch (r) {
    case SkipReason::none: return "none";
    case SkipReason::range_gate: return "range_gate";
    case SkipReason::ill_conditioned: return "ill_conditioned";
  }
  return "unknown";
}

/// Everything one measurement did to the belief.  `gains` holds one 2x2
/// block per robot; robots with zero cross-covariance to both the observer
/// and the target get an exactly zero gain.
struct UpdateRecord {
  RobotId observer = 0;
  RobotId target = 0;
  std::int64_t timestep = 0;
  bool applied = false;
  SkipReason skip_reason = SkipReason::none;
  double predicted_range = 0.0;
  Vec2 innovation{0.0, 0.0};
  Mat2 innovation_cov = Mat2::Zero();
  std::vector<Mat2> gains;
  double logdet_before = 0.0;
  double logdet_after = 0.0;
};

/// One relative measurement folded into the joint belief.
///
/// `headings` are the robots' measured headings for this tick (index id-1);
/// `params` are the per-robot sensor parameter sets.  The observer's entries
/// provide the linearization heading and the noise model.
///
/// Gain and covariance update touch every block:
///   K_i  = (P_ia H_a^T + P_ib H_b^T) S^-1
///   x_i += K_i * innovation
///   P   -= K S K^T, then resymmetrized as (P + P^T) / 2.
inline std::pair<JointBelief, UpdateRecord> ekf_update_single(
    const JointBelief& b, const RelativeMeasurement& m,
    std::span<const double> headings, std::span<const SensorParams> params) {
  const int n = b.n_robots();
  if (static_cast<int>(headings.size()) != n ||
      static_cast<int>(params.size()) != n) {
    throw std::invalid_argument("ekf_update_single: per-robot inputs required");
  }
  const int ia = b.index(m.observer);
  const int ib = b.index(m.target);

  UpdateRecord rec;
  rec.observer = m.observer;
  rec.target = m.target;
  rec.timestep = m.timestep;
  rec.gains.assign(n, Mat2::Zero());
  rec.logdet_before = log_det_covariance(b);
  rec.logdet_after = rec.logdet_before;

  const SensorParams& p = params[ia];
  const double phi_m_a = headings[ia];
  rec.predicted_range = (b.estimate(m.target) - b.estimate(m.observer)).norm();
  if (rec.predicted_range > p.rho_max) {
    rec.skip_reason = SkipReason::range_gate;
    return {b, rec};
  }

  const InnovationTerms t = innovation_and_jacobians(
      m, b.estimate(m.observer), b.estimate(m.target), phi_m_a);
  const MeasurementNoise noise = measurement_noise_covariance(
      m, b.estimate(m.observer), b.estimate(m.target), phi_m_a, p);
  const Mat2 s = innovation_covariance(
      t.h_observer, t.h_target, b.block(m.observer, m.observer),
      b.block(m.observer, m.target), b.block(m.target, m.observer),
      b.block(m.target, m.target), noise.r_z, noise.r_phi);
  const Inverse2 s_inv = invert_sym_2x2(s, kMaxInnovationCondition);
  rec.innovation = t.innovation;
  rec.innovation_cov = s;
  if (!s_inv.ok) {
    rec.skip_reason = SkipReason::ill_conditioned;
    return {b, rec};
  }

  JointBelief out = b;
  MatX& cov = out.covariance();

  // K = (P_:,a H_a^T + P_:,b H_b^T) S^-1, assembled block-column-wise so a
  // robot uncorrelated with the pair contributes exact zeros.
  MatX k(2 * n, 2);
  k = cov.middleCols<2>(2 * ia) * t.h_observer.transpose();
  k += cov.middleCols<2>(2 * ib) * t.h_target.transpose();
  k *= s_inv.inv;

  for (int i = 0; i < n; ++i) {
    rec.gains[i] = k.block<2, 2>(2 * i, 0);
    out.estimate(i + 1) += rec.gains[i] * t.innovation;
  }
  cov -= k * s * k.transpose();
  cov = ((cov + cov.transpose()) / 2.0).eval();

  rec.applied = true;
  rec.logdet_after = log_det_covariance(out);
  return {std::move(out), rec};
}

/// Measurements of one tick folded in one after another, in the order given,
/// relinearizing at the freshest estimates before each one.  All measurements
/// must share a timestep.
inline std::pair<JointBelief, std::vector<UpdateRecord>> sequential_update(
    JointBelief b, std::span<const RelativeMeasurement> measurements,
    std::span<const double> headings, std::span<const SensorParams> params) {
  std::vector<UpdateRecord> records;
  records.reserve(measurements.size());
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    if (measurements[i].timestep != measurements[0].timestep) {
      throw std::invalid_argument(
          "sequential_update: measurements span multiple timesteps");
    }
  }
  for (const RelativeMeasurement& m : measurements) {
    auto [next, rec] = ekf_update_single(b, m, headings, params);
    b = std::move(next);
    records.push_back(std::move(rec));
  }
  return {std::move(b), std::move(records)};
}

}  // namespace coopsched
