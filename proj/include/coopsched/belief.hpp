#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "coopsched/linalg.hpp"

namespace coopsched {

/// Robots are identified 1..N everywhere user-facing; block row/col index is
/// id - 1.
using RobotId = int;

inline double normalize_heading(double phi) {
  const double two_pi = 2.0 * std::numbers::pi;
  phi = std::fmod(phi, two_pi);
  if (phi < 0.0) phi += two_pi;
  return phi;
}

/// True pose of one robot (position + heading).  The filter state tracks
/// positions only; headings enter through measured values.
struct RobotTruth {
  Vec2 position{0.0, 0.0};
  double heading = 0.0;  // [0, 2*pi)
};

/// Per-robot noise description and sensing limits.
struct SensorParams {
  double sigma_v_coeff = 2.253;  // encoder noise std per unit commanded speed
  double sigma_v_floor = 1e-6;   // m/s, keeps the noise model PD at v = 0
  double sigma_omega = 0.587;    // rad/s; drives truth only, the filter state
                                 // carries no heading to consume it
  double sigma_phi = 0.0349;     // rad, compass
  double sigma_rho = 0.147;      // m, range
  double sigma_theta = 0.1;      // rad, bearing
  double v_max = 1.0;            // m/s, encoder saturation
  double rho_max = 10.0;         // m, sensing range
  double r_c = -1.0;             // scalar measurement-noise bound; derived,
                                 // see bounds.hpp (negative = not yet set)

  double sigma_v(double speed) const {
    return std::max(sigma_v_coeff * std::abs(speed), sigma_v_floor);
  }
};

struct ValidityReport {
  double symmetry_residual = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool symmetric = false;
  bool psd = false;
  bool finite = false;

  bool ok() const { return symmetric && psd && finite; }
};

/// Joint position estimate and covariance for a team of N robots.  The
/// covariance is a dense 2N x 2N matrix addressed in 2x2 blocks.
class JointBelief {
 public:
  JointBelief() = default;

  JointBelief(int n_robots, std::vector<Vec2> estimates, MatX covariance)
      : n_(n_robots),
        estimates_(std::move(estimates)),
        cov_(std::move(covariance)) {
    if (n_ <= 0) throw std::invalid_argument("JointBelief: need n >= 1");
    if (static_cast<int>(estimates_.size()) != n_ || cov_.rows() != 2 * n_ ||
        cov_.cols() != 2 * n_) {
      throw std::invalid_argument("JointBelief: shape mismatch");
    }
  }

  int n_robots() const { return n_; }

  std::int64_t timestep() const { return timestep_; }
  void set_timestep(std::int64_t k) { timestep_ = k; }
  void advance_timestep() { ++timestep_; }

  const Vec2& estimate(RobotId id) const { return estimates_[index(id)]; }
  Vec2& estimate(RobotId id) { return estimates_[index(id)]; }
  const std::vector<Vec2>& estimates() const { return estimates_; }

  const MatX& covariance() const { return cov_; }
  MatX& covariance() { return cov_; }

  /// P_ij by value.
  Mat2 block(RobotId i, RobotId j) const {
    return cov_.block<2, 2>(2 * index(i), 2 * index(j));
  }

  void set_block(RobotId i, RobotId j, const Mat2& value) {
    cov_.block<2, 2>(2 * index(i), 2 * index(j)) = value;
  }

  int index(RobotId id) const {
    if (id < 1 || id > n_) {
      throw std::out_of_range("JointBelief: robot id out of range");
    }
    return id - 1;
  }

 private:
  int n_ = 0;
  std::vector<Vec2> estimates_;
  MatX cov_;
  std::int64_t timestep_ = 0;
};

/// Fresh belief with block-diagonal covariance: every robot gets
/// `initial_block` on the diagonal, all cross terms exactly zero.
inline JointBelief init_joint_belief(const std::vector<Vec2>& estimates,
                                     const Mat2& initial_block) {
  const int n = static_cast<int>(estimates.size());
  if (n < 1) throw std::invalid_argument("init_joint_belief: need n >= 1");
  if (!is_psd_2x2(initial_block, 1e-12)) {
    throw std::invalid_argument("init_joint_belief: block not PSD");
  }
  MatX cov = MatX::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) cov.block<2, 2>(2 * i, 2 * i) = initial_block;
  return JointBelief(n, estimates, std::move(cov));
}

inline ValidityReport check_validity(const JointBelief& b,
                                     double sym_tol = 1e-9,
                                     double psd_rel_tol = 1e-9) {
  ValidityReport r;
  const MatX& p = b.covariance();
  r.finite = p.allFinite();
  for (const Vec2& e : b.estimates()) r.finite = r.finite && e.allFinite();
  if (!r.finite) return r;
  r.symmetry_residual = symmetry_residual(p);
  r.symmetric = r.symmetry_residual <= sym_tol;
  const auto [lo, hi] = sym_eigenvalue_range(symmetrized(p));
  r.min_eigenvalue = lo;
  r.max_eigenvalue = hi;
  r.psd = lo >= -psd_rel_tol * std::max(1.0, std::abs(hi));
  return r;
}

inline double log_det_covariance(const JointBelief& b) {
  return log_det(b.covariance());
}

}  // namespace coopsched
