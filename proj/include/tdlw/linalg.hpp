#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "tdlw/types.hpp"

namespace tdlw {

/// Reciprocal-condition threshold below which solves are rejected.
inline constexpr double kSingularRcond = 1e-12;

/// Matrix exponential of a square matrix (scaling-and-squaring with Pade
/// approximation, as provided by Eigen's matrix-functions module).
template <typename Derived>
typename Derived::PlainObject mat_exp(const Eigen::MatrixBase<Derived>& expr) {
  typename Derived::PlainObject m = expr;
  if (m.rows() != m.cols())
    throw DimensionError("mat_exp: matrix must be square, got " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  if (!m.allFinite()) throw DimensionError("mat_exp: non-finite entries");
  return m.exp();
}

/// Solves A X = B by partial-pivot LU. Throws SingularMatrixError carrying a
/// condition estimate when A is singular to working precision.
template <typename DA, typename DB>
typename DB::PlainObject solve_linear(const Eigen::MatrixBase<DA>& a_expr,
                                      const Eigen::MatrixBase<DB>& b_expr) {
  static_assert(std::is_same_v<typename DA::Scalar, typename DB::Scalar>,
                "solve_linear: mixed scalar types");
  typename DA::PlainObject a = a_expr;
  typename DB::PlainObject b = b_expr;
  if (a.rows() != a.cols())
    throw DimensionError("solve_linear: matrix must be square");
  if (!a.allFinite()) throw DimensionError("solve_linear: non-finite entries");
  if (a.rows() != b.rows())
    throw DimensionError("solve_linear: right-hand side has " +
                         std::to_string(b.rows()) + " rows, expected " +
                         std::to_string(a.rows()));
  Eigen::PartialPivLU<typename DA::PlainObject> lu(a);
  const double rc = lu.rcond();
  if (!(rc > kSingularRcond)) {
    const double cond =
        rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    throw SingularMatrixError(
        "solve_linear: matrix singular to working precision (cond ~ " +
            std::to_string(cond) + ")",
        cond);
  }
  return lu.solve(b);
}

namespace detail {

inline bool spectral_less(const cplx& a, const cplx& b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

/// Sorts eigenvalues by descending real part, ties by descending imaginary
/// part, so conjugate pairs sit adjacent with the +imag member first.
inline void sort_spectrum(CVec& v) {
  std::sort(v.data(), v.data() + v.size(), spectral_less);
}

}  // namespace detail

/// Eigenvalues of a square matrix, sorted by descending real part then
/// descending imaginary part. Real input yields an exactly conjugate-paired
/// multiset (Hessenberg reduction + shifted QR, as provided by Eigen).
template <typename Derived>
CVec eigenvalues(const Eigen::MatrixBase<Derived>& expr) {
  typename Derived::PlainObject m = expr;
  if (m.rows() != m.cols())
    throw DimensionError("eigenvalues: matrix must be square");
  if (!m.allFinite()) throw DimensionError("eigenvalues: non-finite entries");
  CVec v;
  if constexpr (std::is_same_v<typename Derived::Scalar, double>) {
    Eigen::EigenSolver<Mat> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
      throw ConvergenceError("eigenvalues: QR iteration failed", 0);
    v = es.eigenvalues();
  } else {
    Eigen::ComplexEigenSolver<CMat> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
      throw ConvergenceError("eigenvalues: QR iteration failed", 0);
    v = es.eigenvalues();
  }
  detail::sort_spectrum(v);
  return v;
}

/// Moore-Penrose pseudo-inverse by SVD with tolerance
/// max(rows, cols) * eps * sigma_max.
inline Mat pseudo_inverse(const Mat& m) {
  if (!m.allFinite()) throw DimensionError("pseudo_inverse: non-finite entries");
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0) return Mat::Zero(m.cols(), m.rows());
  const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                     std::numeric_limits<double>::epsilon() * sv(0);
  Vec inv = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Numerical rank by SVD with the pseudo_inverse tolerance, or with the
/// given relative tolerance.
inline int numerical_rank(const Mat& m, double rel_tol = -1.0) {
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double tol =
      rel_tol > 0 ? rel_tol * sv(0)
                  : static_cast<double>(std::max(m.rows(), m.cols())) *
                        std::numeric_limits<double>::epsilon() * sv(0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++r;
  return r;
}

/// Monic characteristic polynomial coefficients of A by the
/// Faddeev-LeVerrier recurrence. Returns [c0, c1, ..., c_{n-1}] for
/// p(x) = x^n + c_{n-1} x^{n-1} + ... + c1 x + c0.
inline Vec characteristic_polynomial(const Mat& a) {
  if (a.rows() != a.cols())
    throw DimensionError("characteristic_polynomial: matrix must be square");
  if (!a.allFinite())
    throw DimensionError("characteristic_polynomial: non-finite entries");
  const Eigen::Index n = a.rows();
  Vec c = Vec::Zero(n);
  Mat m = Mat::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    m = a * m;
    const double ck = -m.trace() / static_cast<double>(k);
    m.diagonal().array() += ck;
    c(n - k) = ck;
  }
  return c;
}

/// Companion matrix in bottom-row convention: ones on the superdiagonal,
/// the given row as the last row. Its characteristic polynomial is
/// x^n - row[n-1] x^{n-1} - ... - row[1] x - row[0].
inline Mat companion_matrix(const Vec& last_row) {
  const Eigen::Index n = last_row.size();
  if (n < 1) throw DimensionError("companion_matrix: empty row");
  if (!last_row.allFinite())
    throw DimensionError("companion_matrix: non-finite entries");
  Mat m = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) m(i, i + 1) = 1.0;
  m.row(n - 1) = last_row.transpose();
  return m;
}

}  // namespace tdlw
