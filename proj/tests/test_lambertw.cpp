#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <tdlw/lambertw.hpp>

using namespace tdlw;

namespace {

/// Bisection oracle for w*exp(w) = x on a bracketing interval.
double bisect_w(double lo, double hi, double x) {
  auto f = [&](double w) { return w * std::exp(w) - x; };
  double flo = f(lo);
  REQUIRE(flo * f(hi) <= 0.0);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (flo * f(mid) <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
      flo = f(lo);
    }
  }
  return 0.5 * (lo + hi);
}

double identity_residual(cplx w, cplx z) {
  return std::abs(w * std::exp(w) - z) / std::max(1.0, std::abs(z));
}

}  // namespace

TEST_CASE("lambert_w_real fixed points and known values") {
  REQUIRE(lambert_w_real(0, 0.0) == 0.0);
  REQUIRE(lambert_w_real(0, std::exp(1.0)) == Catch::Approx(1.0).epsilon(1e-14));
  REQUIRE(lambert_w_real(0, kLambertBranchPoint) == Catch::Approx(-1.0).margin(1e-7));
  REQUIRE(lambert_w_real(-1, kLambertBranchPoint) == Catch::Approx(-1.0).margin(1e-7));
}

TEST_CASE("lambert_w_real matches a bisection oracle to 1e-12") {
  for (double x : {-0.36, -0.3, -0.1, 0.3, 1.0, 5.0, 100.0, 62089.8687220539}) {
    const double w = lambert_w_real(0, x);
    const double oracle = bisect_w(-1.0, 20.0, x);
    REQUIRE(std::abs(w - oracle) <= 1e-12 * std::max(1.0, std::abs(oracle)));
  }
  for (double x : {-0.36, -0.2, -0.1, -0.05, -1e-3}) {
    const double w = lambert_w_real(-1, x);
    const double oracle = bisect_w(-50.0, -1.0, x);
    REQUIRE(std::abs(w - oracle) <= 1e-12 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("lambert_w_real reproduces branch-attribution magnitudes") {
  // Trailing Lambert pairs (m, w) arising in the worked systems.
  REQUIRE(lambert_w_real(0, 6.2090e4) == Catch::Approx(8.8553).margin(1e-3));
  REQUIRE(lambert_w_real(0, 62089.8687220539) ==
          Catch::Approx(8.855319732).margin(1e-8));
  REQUIRE(lambert_w_real(-1, -0.0732625556) == Catch::Approx(-4.0).margin(1e-8));
  REQUIRE(lambert_w_real(-1, -0.0733) == Catch::Approx(-4.0).margin(1e-2));
  REQUIRE(lambert_w_real(0, -0.2759596643) == Catch::Approx(-0.42).margin(1e-9));
}

TEST_CASE("lambert_w_real rejects out-of-domain arguments") {
  REQUIRE_THROWS_AS(lambert_w_real(0, -0.4), DomainError);
  REQUIRE_THROWS_AS(lambert_w_real(-1, 0.1), DomainError);
  REQUIRE_THROWS_AS(lambert_w_real(-1, 0.0), DomainError);
  REQUIRE_THROWS_AS(lambert_w_real(2, 1.0), DomainError);
  REQUIRE_THROWS_AS(lambert_w_real(0, std::nan("")), DomainError);
}

TEST_CASE("lambert_w at the omega constant and the branch point") {
  const cplx w = lambert_w(0, cplx(1.0, 0.0));
  REQUIRE(std::abs(w - cplx(0.5671432904097838, 0.0)) < 1e-14);
  REQUIRE(lambert_w(0, cplx(0.0, 0.0)) == cplx(0.0, 0.0));
  REQUIRE_THROWS_AS(lambert_w(1, cplx(0.0, 0.0)), DomainError);
  REQUIRE_THROWS_AS(lambert_w(-1, cplx(0.0, 0.0)), DomainError);
}

TEST_CASE("lambert_w on branch 1 satisfies the identity and the strip") {
  const cplx z(1.0, 0.0);
  const cplx w = lambert_w(1, z);
  REQUIRE(identity_residual(w, z) < 1e-12);
  REQUIRE(in_branch_strip(1, w));
  REQUIRE(w.imag() > std::numbers::pi);
  // Conjugate symmetry across branches 1 and -1 at a real argument.
  const cplx wm = lambert_w(-1, z);
  REQUIRE(std::abs(wm - std::conj(w)) < 1e-12);
}

TEST_CASE("lambert_w identity holds over random arguments per branch") {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int k : {-2, -1, 0, 1, 2}) {
    for (int i = 0; i < 2000; ++i) {
      cplx z(u(rng), u(rng));
      if (std::abs(z) < 1e-6) continue;
      if (k == -1 && z.imag() == 0.0 && z.real() > 0.0) z = -z;
      const cplx w = lambert_w(k, z);
      REQUIRE(identity_residual(w, z) <= 1e-10);
      REQUIRE(in_branch_strip(k, w));
    }
  }
}

TEST_CASE("lambert_w near the branch point") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> uth(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> ur(-12.0, -1.0);
  for (int k : {0, -1}) {
    for (int i = 0; i < 500; ++i) {
      const double r = std::pow(10.0, ur(rng));
      const double th = uth(rng);
      const cplx z = cplx(kLambertBranchPoint, 0.0) + r * std::polar(1.0, th);
      const cplx w = lambert_w(k, z);
      REQUIRE(identity_residual(w, z) <= 1e-10);
      REQUIRE(in_branch_strip(k, w));
    }
  }
}

TEST_CASE("real branches split at w = -1") {
  // Forward values straddling the branch point stay on their branch.
  for (double w0 : {-0.99, -0.5, -0.05}) {
    const double x = w0 * std::exp(w0);
    REQUIRE(lambert_w_real(0, x) == Catch::Approx(w0).epsilon(1e-12));
  }
  for (double w0 : {-1.01, -2.0, -24.0}) {
    const double x = w0 * std::exp(w0);
    REQUIRE(lambert_w_real(-1, x) == Catch::Approx(w0).epsilon(1e-12));
  }
}

TEST_CASE("lambert_w_cc scales the last row by the trailing Lambert factor") {
  Vec row(3);
  row << 93907.6355054132, -6150.5399534832, 62089.8687220539;
  const CCMatrix m(row);
  const CCMatrix w = lambert_w_cc(0, m);
  REQUIRE(w.last_row(0) == Catch::Approx(13.3932017379).margin(1e-6));
  REQUIRE(w.last_row(1) == Catch::Approx(-0.8771962147).margin(1e-6));
  REQUIRE(w.last_row(2) == Catch::Approx(8.855319732).margin(1e-6));
}

TEST_CASE("lambert_w_cc on the secondary real branch") {
  Vec row(3);
  row << 0.0366312778, -0.3296815, -0.0732625556;
  const CCMatrix m(row);
  const CCMatrix w = lambert_w_cc(-1, m);
  REQUIRE(w.last_row(0) == Catch::Approx(2.0).margin(1e-6));
  REQUIRE(w.last_row(1) == Catch::Approx(-18.0).margin(1e-5));
  REQUIRE(w.last_row(2) == Catch::Approx(-4.0).margin(1e-6));
}

TEST_CASE("lambert_w_cc treats a tiny trailing entry as zero") {
  Vec row(2);
  row << 3.0, 0.0;
  const CCMatrix w = lambert_w_cc(0, CCMatrix(row));
  REQUIRE(w.last_row(0) == 3.0);
  REQUIRE(w.last_row(1) == 0.0);

  Vec row2(2);
  row2 << 3.0, 1e-13;
  const CCMatrix w2 = lambert_w_cc(0, CCMatrix(row2));
  REQUIRE(w2.last_row(0) == 3.0);
}

TEST_CASE("lambert_w_cc is continuous across the zero-tail threshold") {
  Vec row(2);
  row << 2.0, 1e-9;
  const CCMatrix w = lambert_w_cc(0, CCMatrix(row));
  // W0(m)/m -> 1 as m -> 0, so the row is nearly unchanged.
  REQUIRE(w.last_row(0) == Catch::Approx(2.0).margin(1e-8));
}

TEST_CASE("lambert_w_cc matrix identity via the dense exponential") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 3;
    Vec row(n);
    for (int i = 0; i < n; ++i) row(i) = u(rng);
    const int k = (row(n - 1) < 0.0 && trial % 2 == 0) ? -1 : 0;
    if (row(n - 1) < kLambertBranchPoint) row(n - 1) = -0.3;
    if (k == -1 && row(n - 1) >= 0.0) row(n - 1) = -0.25;
    const CCMatrix m(row);
    const CCMatrix w = lambert_w_cc(k, m);
    // W exp(W) = M, checked densely; exp(W) = I + W * (e^{w_n}-1)/w_n.
    const Mat wd = w.dense();
    const double wn = w.eigenvalue();
    const double phi = std::abs(wn) < 1e-12 ? 1.0 : (std::exp(wn) - 1.0) / wn;
    const Mat expw = Mat::Identity(n, n) + phi * wd;
    REQUIRE((wd * expw - m.dense()).norm() <= 1e-10 * std::max(1.0, m.dense().norm()));
  }
}

TEST_CASE("lambert_w_cc rejects bad branches and domains") {
  Vec row(2);
  row << 1.0, 0.5;
  REQUIRE_THROWS_AS(lambert_w_cc(2, CCMatrix(row)), DomainError);
  REQUIRE_THROWS_AS(lambert_w_cc(-1, CCMatrix(row)), DomainError);
  Vec row2(2);
  row2 << 1.0, -0.4;
  REQUIRE_THROWS_AS(lambert_w_cc(0, CCMatrix(row2)), DomainError);
}
