#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "coopsched/linalg.hpp"
#include "coopsched/rng.hpp"

using namespace coopsched;

TEST_CASE("log_det matches direct determinant on small matrices") {
  MatX a(2, 2);
  a << 4.0, 1.0, 1.0, 3.0;  // det = 11
  CHECK(log_det(a) == Catch::Approx(std::log(11.0)).epsilon(1e-12));

  CHECK(log_det(MatX::Identity(5, 5)) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("log_det stays finite where the plain determinant underflows") {
  const int n = 400;
  const MatX tiny = 1e-3 * MatX::Identity(n, n);
  // det = 1e-1200 underflows double; the log is exactly representable.
  CHECK(log_det(tiny) == Catch::Approx(n * std::log(1e-3)).epsilon(1e-12));
}

TEST_CASE("log_det rejects negative determinants and flags singularity") {
  MatX flip(2, 2);
  flip << 0.0, 1.0, 1.0, 0.0;  // det = -1
  CHECK_THROWS_AS(log_det(flip), std::domain_error);
  CHECK(log_det(MatX::Zero(3, 3)) == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(log_det(MatX::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("log_sum_exp agrees with direct evaluation and resists overflow") {
  const std::vector<double> xs{0.0, std::log(2.0), std::log(3.0)};
  CHECK(log_sum_exp(xs) == Catch::Approx(std::log(6.0)).epsilon(1e-12));

  const std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == Catch::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));

  CHECK(log_sum_exp(std::vector<double>{}) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("rotated_diag equals C diag C^T and is exactly symmetric") {
  const double phi = 0.7, d0 = 2.5, d1 = 0.3;
  Mat2 c;
  c << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  const Mat2 expect = c * Vec2{d0, d1}.asDiagonal() * c.transpose();
  const Mat2 got = rotated_diag(phi, d0, d1);
  CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(got(0, 1) == got(1, 0));  // bitwise
}

TEST_CASE("outer_sym builds v v^T") {
  const Vec2 v{3.0, -2.0};
  const Mat2 m = outer_sym(v);
  CHECK(m(0, 0) == 9.0);
  CHECK(m(1, 1) == 4.0);
  CHECK(m(0, 1) == -6.0);
  CHECK(m(0, 1) == m(1, 0));
}

TEST_CASE("sym_eigenvalues_2x2 sorted ascending") {
  Mat2 a;
  a << 2.0, 1.0, 1.0, 2.0;  // eigenvalues 1 and 3
  const auto [lo, hi] = sym_eigenvalues_2x2(a);
  CHECK(lo == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(hi == Catch::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("invert_sym_2x2 inverts well-conditioned input and reports condition") {
  Mat2 a;
  a << 4.0, 1.0, 1.0, 3.0;
  const Inverse2 r = invert_sym_2x2(a, 1e12);
  REQUIRE(r.ok);
  CHECK(((a * r.inv) - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(r.condition > 1.0);

  Mat2 singular;
  singular << 1.0, 1.0, 1.0, 1.0;
  CHECK_FALSE(invert_sym_2x2(singular, 1e12).ok);

  Mat2 ill;
  ill << 1.0, 0.0, 0.0, 1e-14;
  CHECK_FALSE(invert_sym_2x2(ill, 1e12).ok);
  CHECK(invert_sym_2x2(ill, 1e15).ok);
}

TEST_CASE("symmetry_residual and is_psd behave on constructed matrices") {
  MatX sym = MatX::Identity(4, 4);
  CHECK(symmetry_residual(sym) == 0.0);
  sym(0, 1) = 1e-3;
  CHECK(symmetry_residual(sym) == Catch::Approx(1e-3));

  Stream rng(42);
  MatX g(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) g(i, j) = rng.normal();
  const MatX psd = g * g.transpose();
  CHECK(is_psd(psd));
  MatX indefinite = psd;
  indefinite(0, 0) -= 1e3;
  CHECK_FALSE(is_psd(indefinite));
}
