#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace coopsched {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// log(det(a)) for a matrix with positive determinant, accumulated in log
/// space from a pivoted LU factorization so that products of many small
/// (or large) diagonal factors do not under/overflow.
inline double log_det(const MatX& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument("log_det: matrix must be square and non-empty");
  }
  Eigen::PartialPivLU<MatX> lu(a);
  const auto& u_diag = lu.matrixLU().diagonal();
  double log_abs = 0.0;
  int sign = lu.permutationP().determinant();
  for (Eigen::Index i = 0; i < u_diag.size(); ++i) {
    const double d = u_diag[i];
    if (d == 0.0) return -std::numeric_limits<double>::infinity();
    if (d < 0.0) sign = -sign;
    log_abs += std::log(std::abs(d));
  }
  if (sign < 0) {
    throw std::domain_error("log_det: determinant is negative");
  }
  return log_abs;
}

/// log(sum(exp(x_i))) without overflow; -inf for an empty list.
inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// C(phi) * diag(d0, d1) * C(phi)^T with an exactly symmetric result.
inline Mat2 rotated_diag(double phi, double d0, double d1) {
  const double c = std::cos(phi), s = std::sin(phi);
  Mat2 out;
  const double off = c * s * (d0 - d1);
  out(0, 0) = c * c * d0 + s * s * d1;
  out(1, 1) = s * s * d0 + c * c * d1;
  out(0, 1) = off;
  out(1, 0) = off;
  return out;
}

/// v * v^T, exactly symmetric.
inline Mat2 outer_sym(const Vec2& v) {
  Mat2 out;
  out(0, 0) = v[0] * v[0];
  out(1, 1) = v[1] * v[1];
  const double off = v[0] * v[1];
  out(0, 1) = off;
  out(1, 0) = off;
  return out;
}

/// Eigenvalues of a symmetric 2x2, ascending.
inline std::pair<double, double> sym_eigenvalues_2x2(const Mat2& a) {
  const double tr = a(0, 0) + a(1, 1);
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  return {tr / 2.0 - disc, tr / 2.0 + disc};
}

inline bool is_psd_2x2(const Mat2& a, double tol = 0.0) {
  const auto [lo, hi] = sym_eigenvalues_2x2(a);
  return lo >= -tol * std::max(1.0, std::abs(hi));
}

struct Inverse2 {
  Mat2 inv;
  double condition = 0.0;  // ratio of absolute eigenvalues, inf if singular
  bool ok = false;
};

/// Closed-form adjugate inverse of a symmetric 2x2 with a condition estimate.
inline Inverse2 invert_sym_2x2(const Mat2& a, double max_condition) {
  Inverse2 r;
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const auto [lo, hi] = sym_eigenvalues_2x2(a);
  const double lo_abs = std::abs(lo), hi_abs = std::abs(hi);
  r.condition = lo_abs == 0.0 ? std::numeric_limits<double>::infinity()
                              : hi_abs / lo_abs;
  if (det <= 0.0 || !std::isfinite(r.condition) || r.condition > max_condition) {
    return r;
  }
  r.inv(0, 0) = a(1, 1) / det;
  r.inv(1, 1) = a(0, 0) / det;
  r.inv(0, 1) = -a(0, 1) / det;
  r.inv(1, 0) = -a(1, 0) / det;
  r.ok = true;
  return r;
}

/// Largest absolute entry of (a - a^T).
inline double symmetry_residual(const MatX& a) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
  return worst;
}

/// Smallest and largest eigenvalue of a symmetric matrix.
inline std::pair<double, double> sym_eigenvalue_range(const MatX& a) {
  Eigen::SelfAdjointEigenSolver<MatX> es(a, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

inline bool is_psd(const MatX& a, double rel_tol = 1e-9) {
  const auto [lo, hi] = sym_eigenvalue_range(a);
  return lo >= -rel_tol * std::max(1.0, std::abs(hi));
}

inline MatX symmetrized(const MatX& a) { return (a + a.transpose()) / 2.0; }

}  // namespace coopsched
