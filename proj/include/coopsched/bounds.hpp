#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "coopsched/belief.hpp"
#include "coopsched/linalg.hpp"

namespace coopsched {

/// Constant per-tick process-noise bound: the per-robot increment
/// Q = dt^2 C diag(sigma_v(v_m)^2, v_m^2 sigma_phi^2) C^T is dominated, for
/// any |v_m| <= v_max and any heading, by
///   dt^2 * max(sigma_v(v_max)^2, v_max^2 sigma_phi^2) * I.
inline Mat2 q_constant_bound(const SensorParams& p, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("q_constant_bound: dt <= 0");
  const double sv = p.sigma_v(p.v_max);
  const double q = dt * dt *
                   std::max(sv * sv, (p.v_max * p.sigma_phi) *
                                         (p.v_max * p.sigma_phi));
  return q * Mat2::Identity();
}

/// Scalar measurement-noise bound: for any in-range reading the combined
/// world-frame noise covariance satisfies R <= r_c * I with
///   r_c = sigma_rho^2 + (sigma_phi^2 + sigma_theta^2) * rho_max^2.
inline double r_scalar_bound(const SensorParams& p) {
  return p.sigma_rho * p.sigma_rho +
         (p.sigma_phi * p.sigma_phi + p.sigma_theta * p.sigma_theta) *
             p.rho_max * p.rho_max;
}

/// Copy of `p` with the derived r_c field filled in.
inline SensorParams finalize_sensor_params(SensorParams p) {
  p.r_c = r_scalar_bound(p);
  return p;
}

/// Combined measurement-noise covariance rotated into the world frame and
/// written in terms of the relative position d = x_b - x_a alone:
///   R = (sigma_rho^2 / |d|^2) d d^T
///       + (sigma_theta^2 + sigma_phi^2) (J d)(J d)^T,  J = [[0,1],[-1,0]].
/// Its eigenvalues are sigma_rho^2 along d and
/// (sigma_theta^2 + sigma_phi^2)|d|^2 across it, hence R <= r_c I whenever
/// |d| <= rho_max.
inline Mat2 world_frame_noise_covariance(const Vec2& displacement,
                                         const SensorParams& p) {
  const double rho_sq = displacement.squaredNorm();
  if (rho_sq == 0.0) {
    return p.sigma_rho * p.sigma_rho * Mat2::Identity();
  }
  const Vec2 jd{displacement[1], -displacement[0]};
  return Mat2(p.sigma_rho * p.sigma_rho / rho_sq * outer_sym(displacement) +
              (p.sigma_theta * p.sigma_theta + p.sigma_phi * p.sigma_phi) *
                  outer_sym(jd));
}

/// tr(P_aa + P_ab^T P_aa^{-1} P_ab - P_ab - P_ab^T), the locally computable
/// lower bound on the trace of the pair's relative covariance.  With
/// epsilon > 0, epsilon * I is added to P_aa before inversion; with
/// epsilon = 0 a singular (or indefinite) P_aa throws.
inline double pair_gain_trace(const Mat2& p_aa, const Mat2& p_ab,
                              double epsilon = 0.0) {
  const Mat2 a = p_aa + epsilon * Mat2::Identity();
  const Inverse2 a_inv = invert_sym_2x2(a, 1e15);
  if (!a_inv.ok) {
    throw std::domain_error("pair_gain_trace: observer block not invertible");
  }
  const double schur = (p_ab.transpose() * a_inv.inv * p_ab).trace();
  return p_aa.trace() + schur - 2.0 * p_ab.trace();
}

/// Conservative joint update in information form, realized as a rank-2
/// downdate: with H holding -I at the observer a and +I at the target b,
///   P+ = (P^-1 + r_c^-1 H^T H)^-1
///      = P - U (r_c I + H P H^T)^-1 U^T,   U = P H^T.
/// H P H^T = P_aa - P_ab - P_ba + P_bb and U_i = P_ib - P_ia, so the whole
/// update costs O(N^2) and never forms a 2N x 2N inverse.
inline MatX info_form_bounded_update(const MatX& cov, RobotId a, RobotId b,
                                     double r_c, int n_robots) {
  if (a < 1 || a > n_robots || b < 1 || b > n_robots || a == b) {
    throw std::invalid_argument("info_form_bounded_update: bad robot pair");
  }
  if (!(r_c > 0.0)) {
    throw std::invalid_argument("info_form_bounded_update: r_c must be > 0");
  }
  if (cov.rows() != 2 * n_robots || cov.cols() != 2 * n_robots) {
    throw std::invalid_argument("info_form_bounded_update: shape mismatch");
  }
  const int ia = a - 1, ib = b - 1;
  const MatX u =
      cov.middleCols<2>(2 * ib) - cov.middleCols<2>(2 * ia);  // 2N x 2
  const Mat2 hph = cov.block<2, 2>(2 * ia, 2 * ia) -
                   cov.block<2, 2>(2 * ia, 2 * ib) -
                   cov.block<2, 2>(2 * ib, 2 * ia) +
                   cov.block<2, 2>(2 * ib, 2 * ib);
  const Inverse2 mid = invert_sym_2x2(
      Mat2(r_c * Mat2::Identity() + hph), 1e15);
  if (!mid.ok) {
    throw std::domain_error("info_form_bounded_update: singular pair block");
  }
  MatX out = cov - u * mid.inv * u.transpose();
  return ((out + out.transpose()) / 2.0).eval();
}

/// Dense reference implementation of the conservative update,
/// (P^-1 + r_c^-1 H^T H)^-1 computed literally.  O(N^3); kept as the oracle
/// the rank-2 path is tested against.
inline MatX bounded_update_dense_oracle(const MatX& cov, RobotId a, RobotId b,
                                        double r_c, int n_robots) {
  if (a < 1 || a > n_robots || b < 1 || b > n_robots || a == b) {
    throw std::invalid_argument("bounded_update_dense_oracle: bad robot pair");
  }
  MatX h = MatX::Zero(2, 2 * n_robots);
  h.block<2, 2>(0, 2 * (a - 1)) = -Mat2::Identity();
  h.block<2, 2>(0, 2 * (b - 1)) = Mat2::Identity();
  const MatX info = cov.inverse() + h.transpose() * h / r_c;
  MatX out = info.inverse();
  return ((out + out.transpose()) / 2.0).eval();
}

/// Determinant guarantee for one conservative update:
///   det(P+) <= det(P^-) / (1 + r_c^-1 pair_gain_trace(P_aa, P_ab)).
/// Returned in log space; `value` is exp(log_value) and may underflow for
/// large teams.
struct DetBound {
  double value = 0.0;
  double log_value = 0.0;
  double denominator = 1.0;
};

inline DetBound updated_det_upper_bound(const MatX& cov, RobotId a, RobotId b,
                                        double r_c, int n_robots) {
  if (a < 1 || a > n_robots || b < 1 || b > n_robots || a == b) {
    throw std::invalid_argument("updated_det_upper_bound: bad robot pair");
  }
  if (!(r_c > 0.0)) {
    throw std::invalid_argument("updated_det_upper_bound: r_c must be > 0");
  }
  const Mat2 p_aa = cov.block<2, 2>(2 * (a - 1), 2 * (a - 1));
  const Mat2 p_ab = cov.block<2, 2>(2 * (a - 1), 2 * (b - 1));
  DetBound out;
  out.denominator = 1.0 + pair_gain_trace(p_aa, p_ab) / r_c;
  out.log_value = log_det(cov) - std::log(out.denominator);
  out.value = std::exp(out.log_value);
  return out;
}

/// det(I + A) >= 1 + tr(A) for PSD A (and both sides are > 0).
struct DetTraceInequality {
  double det_lhs = 0.0;
  double trace_rhs = 0.0;
  bool holds = false;
};

inline DetTraceInequality check_det_trace_inequality(const MatX& a,
                                                     double tol = 1e-9) {
  DetTraceInequality r;
  const MatX m = MatX::Identity(a.rows(), a.cols()) + a;
  r.det_lhs = std::exp(log_det(m));
  r.trace_rhs = 1.0 + a.trace();
  r.holds = r.det_lhs >= r.trace_rhs * (1.0 - tol) && r.trace_rhs > 0.0;
  return r;
}

/// For a PSD block matrix [[A, B^T], [B, C]] with A positive definite:
///   tr(A + C - B - B^T) >= tr(A + B A^{-1} B^T - B - B^T) >= 0,
/// i.e. substituting the Schur lower bound B A^{-1} B^T for C never raises
/// the trace.  All three blocks must be square and equally sized.
struct BlockTraceInequality {
  double direct_trace = 0.0;  // uses C
  double schur_trace = 0.0;   // replaces C by B A^{-1} B^T
  bool holds = false;
};

inline BlockTraceInequality check_block_trace_inequality(const MatX& a,
                                                         const MatX& b,
                                                         const MatX& c,
                                                         double tol = 1e-9) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || c.rows() != c.cols() ||
      a.rows() != b.rows() || a.rows() != c.rows()) {
    throw std::invalid_argument(
        "check_block_trace_inequality: blocks must be square, equal size");
  }
  Eigen::LLT<MatX> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error(
        "check_block_trace_inequality: A not positive definite");
  }
  BlockTraceInequality r;
  r.direct_trace = (a + c - b - b.transpose()).trace();
  r.schur_trace = (a + b * llt.solve(b.transpose()) - b - b.transpose())
                      .trace();
  const double scale = std::max({1.0, std::abs(r.direct_trace),
                                 std::abs(r.schur_trace)});
  r.holds = r.direct_trace >= r.schur_trace - tol * scale &&
            r.schur_trace >= -tol * scale;
  return r;
}

/// Measurement-free running bound on the joint covariance: starts at the
/// filter's initial covariance, grows by the constant process bound each
/// tick, and absorbs each applied measurement through the conservative
/// information-form update.  As long as the filter's inputs respect the
/// saturation limits, cov(filter) <= cov(bound) in the PSD order at every
/// tick.
class BoundState {
 public:
  BoundState() = default;

  BoundState(const JointBelief& b, std::span<const SensorParams> params,
             double dt)
      : n_(b.n_robots()), cov_(b.covariance()) {
    if (static_cast<int>(params.size()) != n_) {
      throw std::invalid_argument("BoundState: per-robot params required");
    }
    q_step_.reserve(n_);
    r_c_.reserve(n_);
    for (const SensorParams& p : params) {
      q_step_.push_back(q_constant_bound(p, dt));
      r_c_.push_back(p.r_c > 0.0 ? p.r_c : r_scalar_bound(p));
    }
  }

  void propagate() {
    for (int i = 0; i < n_; ++i) {
      cov_.block<2, 2>(2 * i, 2 * i) += q_step_[i];
    }
  }

  void apply_update(RobotId observer, RobotId target) {
    cov_ = info_form_bounded_update(cov_, observer, target,
                                    r_c_[observer - 1], n_);
  }

  const MatX& covariance() const { return cov_; }
  int n_robots() const { return n_; }

 private:
  int n_ = 0;
  MatX cov_;
  std::vector<Mat2> q_step_;
  std::vector<double> r_c_;
};

}  // namespace coopsched
