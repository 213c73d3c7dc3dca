#include <catch_amalgamated.hpp>

#include <random>

#include <tdlw/linalg.hpp>

#include "test_helpers.hpp"

using namespace tdlw;
using tdlw_test::max_abs_diff;
using tdlw_test::multiset_distance;
using tdlw_test::random_matrix;
using tdlw_test::to_vector;

namespace {

Mat ex1_A() {
  Mat a(3, 3);
  a << -1, 2, -1, -4, -1, -3, -2, -3, -2;
  return a;
}

/// RK4 integration of X' = M X, X(0) = I over [0, 1].
Mat integrate_expm(const Mat& m, int steps) {
  const double dt = 1.0 / steps;
  Mat x = Mat::Identity(m.rows(), m.cols());
  for (int i = 0; i < steps; ++i) {
    Mat k1 = m * x;
    Mat k2 = m * (x + 0.5 * dt * k1);
    Mat k3 = m * (x + 0.5 * dt * k2);
    Mat k4 = m * (x + dt * k3);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

}  // namespace

TEST_CASE("mat_exp of the zero matrix is the identity") {
  REQUIRE(max_abs_diff(mat_exp(Mat::Zero(3, 3)), Mat::Identity(3, 3)) < 1e-15);
}

TEST_CASE("mat_exp of a diagonal matrix exponentiates the diagonal") {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 2.0;
  Mat e = mat_exp(d);
  REQUIRE(e(0, 0) == Catch::Approx(std::exp(1.0)).epsilon(1e-14));
  REQUIRE(e(1, 1) == Catch::Approx(std::exp(2.0)).epsilon(1e-14));
  REQUIRE(std::abs(e(0, 1)) < 1e-15);
  REQUIRE(std::abs(e(1, 0)) < 1e-15);
}

TEST_CASE("mat_exp agrees with direct ODE integration") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 2 + trial % 3;
    Mat m = random_matrix(rng, n, 1.5);
    Mat e = mat_exp(m);
    Mat x = integrate_expm(m, 2000);
    REQUIRE(max_abs_diff(e, x) < 1e-10 * std::max(1.0, e.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("mat_exp of M and -M are mutual inverses") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 4;
    Mat m = random_matrix(rng, n, 2.0);
    Mat prod = mat_exp(m) * mat_exp(Mat(-m));
    REQUIRE(max_abs_diff(prod, Mat::Identity(n, n)) < 1e-8);
  }
}

TEST_CASE("mat_exp rejects non-square input") {
  REQUIRE_THROWS_AS(mat_exp(Mat::Zero(2, 3)), DimensionError);
}

TEST_CASE("solve_linear with the identity returns the right-hand side") {
  Mat b(2, 2);
  b << 1, 2, 3, 4;
  REQUIRE(max_abs_diff(solve_linear(Mat::Identity(2, 2), b), b) < 1e-15);
}

TEST_CASE("solve_linear inverts a diagonal system") {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 4.0;
  Mat b(2, 1);
  b << 2, 8;
  Mat x = solve_linear(a, b);
  REQUIRE(x(0, 0) == Catch::Approx(1.0));
  REQUIRE(x(1, 0) == Catch::Approx(2.0));
}

TEST_CASE("solve_linear recovers the controllability similarity transform") {
  // U T^{-T}... T satisfies T Uc = U for the example pair below.
  Mat u(3, 3);
  u << -1, 0, 2, 0, 1, -1, 1, 0, -3;
  Mat uc(3, 3);
  uc << 0, 0, 1, 0, 1, -4, 1, -4, 14;
  Mat t = solve_linear(Mat(uc.transpose()), Mat(u.transpose())).transpose();
  Mat t_expected(3, 3);
  t_expected << 0, -4, -1, 3, 1, 0, -1, 4, 1;
  REQUIRE(max_abs_diff(t, t_expected) < 1e-12);
}

TEST_CASE("solve_linear residuals stay at working precision") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    Mat a = random_matrix(rng, n, 1.0) + 2.0 * Mat::Identity(n, n);
    Mat b = random_matrix(rng, n, 1.0);
    Mat x = solve_linear(a, b);
    const double scale = a.norm() * x.norm() + b.norm();
    REQUIRE((a * x - b).norm() < 1e-12 * scale);
  }
}

TEST_CASE("solve_linear rejects a singular matrix with a condition estimate") {
  Mat a(2, 2);
  a << 1, 2, 2, 4;
  Mat b = Mat::Identity(2, 2);
  REQUIRE_THROWS_AS(solve_linear(a, b), SingularMatrixError);
  try {
    solve_linear(a, b);
  } catch (const SingularMatrixError& e) {
    REQUIRE(e.condition > 1e12);
  }
}

TEST_CASE("eigenvalues of a diagonal matrix are sorted by real part") {
  Mat d = Mat::Zero(3, 3);
  d(0, 0) = 1.0;
  d(1, 1) = 3.0;
  d(2, 2) = 2.0;
  CVec v = eigenvalues(d);
  REQUIRE(v(0).real() == Catch::Approx(3.0));
  REQUIRE(v(1).real() == Catch::Approx(2.0));
  REQUIRE(v(2).real() == Catch::Approx(1.0));
}

TEST_CASE("eigenvalues of a companion matrix match its assigned roots") {
  Vec row(3);
  row << -6, -11, -6;
  CVec v = eigenvalues(companion_matrix(row));
  REQUIRE(std::abs(v(0) - cplx(-1, 0)) < 1e-10);
  REQUIRE(std::abs(v(1) - cplx(-2, 0)) < 1e-10);
  REQUIRE(std::abs(v(2) - cplx(-3, 0)) < 1e-10);
}

TEST_CASE("eigenvalues of a dominant-root companion matrix") {
  Vec row(3);
  row << -0.3034, -2.4386, 0.4277;
  CVec v = eigenvalues(companion_matrix(row));
  REQUIRE(std::abs(v(0) - cplx(0.2744, 1.5588)) < 1e-3);
  REQUIRE(std::abs(v(1) - cplx(0.2744, -1.5588)) < 1e-3);
  REQUIRE(std::abs(v(2) - cplx(-0.1211, 0.0)) < 1e-3);
}

TEST_CASE("eigenvalues of real matrices are conjugate-paired") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    CVec v = eigenvalues(random_matrix(rng, n, 3.0));
    std::vector<cplx> vals = to_vector(v);
    std::vector<cplx> conj(vals.size());
    std::transform(vals.begin(), vals.end(), conj.begin(),
                   [](cplx z) { return std::conj(z); });
    REQUIRE(multiset_distance(vals, conj) < 1e-10);
    for (Eigen::Index i = 1; i < v.size(); ++i) {
      REQUIRE((v(i - 1).real() > v(i).real() ||
               (v(i - 1).real() == v(i).real() && v(i - 1).imag() >= v(i).imag())));
    }
  }
}

TEST_CASE("pseudo_inverse of the identity and of zero") {
  REQUIRE(max_abs_diff(pseudo_inverse(Mat::Identity(3, 3)), Mat::Identity(3, 3)) <
          1e-14);
  REQUIRE(pseudo_inverse(Mat::Zero(2, 3)).norm() == 0.0);
}

TEST_CASE("pseudo_inverse of a rank-one matrix") {
  Mat m(2, 2);
  m << 0, 0, 1, 2;
  Mat p = pseudo_inverse(m);
  // Row space is span{(1,2)}; M+ = M^T / 5.
  Mat expected(2, 2);
  expected << 0, 0.2, 0, 0.4;
  REQUIRE(max_abs_diff(p, expected) < 1e-14);
}

TEST_CASE("pseudo_inverse satisfies the Penrose conditions") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial % 2;
    Mat a = random_matrix(rng, n, 1.0);
    if (trial % 2 == 0) a.row(n - 1) = a.row(0);  // force rank deficiency
    Mat p = pseudo_inverse(a);
    REQUIRE(max_abs_diff(a * p * a, a) < 1e-10);
    REQUIRE(max_abs_diff(p * a * p, p) < 1e-10);
    REQUIRE(max_abs_diff(Mat((a * p).transpose()), Mat(a * p)) < 1e-10);
    REQUIRE(max_abs_diff(Mat((p * a).transpose()), Mat(p * a)) < 1e-10);
  }
}

TEST_CASE("characteristic_polynomial of the running example system") {
  Vec c = characteristic_polynomial(ex1_A());
  REQUIRE(c(0) == Catch::Approx(7.0).margin(1e-12));
  REQUIRE(c(1) == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(c(2) == Catch::Approx(4.0).margin(1e-12));
}

TEST_CASE("characteristic_polynomial matches the companion spectrum") {
  std::mt19937 rng(57);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 4;
    Mat a = random_matrix(rng, n, 2.0);
    Vec c = characteristic_polynomial(a);
    Vec row = -c;
    CVec va = eigenvalues(a);
    CVec vc = eigenvalues(companion_matrix(row));
    REQUIRE(multiset_distance(to_vector(va), to_vector(vc)) < 1e-6);
  }
}

TEST_CASE("companion_matrix layout") {
  Vec row(3);
  row << -7, -2, -4;
  Mat m = companion_matrix(row);
  Mat expected(3, 3);
  expected << 0, 1, 0, 0, 0, 1, -7, -2, -4;
  REQUIRE(max_abs_diff(m, expected) == 0.0);
  REQUIRE(companion_matrix(Vec::Ones(1))(0, 0) == 1.0);
}

TEST_CASE("numerical_rank detects rank deficiency") {
  Mat a(3, 3);
  a << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  REQUIRE(numerical_rank(a) == 2);
  REQUIRE(numerical_rank(Mat::Identity(4, 4)) == 4);
  REQUIRE(numerical_rank(Mat::Zero(2, 2)) == 0);
}
