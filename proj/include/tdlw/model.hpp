#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "tdlw/linalg.hpp"
#include "tdlw/types.hpp"

namespace tdlw {

/// Entrywise tolerance for recognizing companion/CC structure.
inline constexpr double kCCFormTol = 1e-12;

/// Linear time-delay system x'(t) = A x(t) + Ad x(t - h).
struct TimeDelaySystem {
  Mat A;
  Mat Ad;
  double h;

  TimeDelaySystem(Mat a, Mat ad, double delay)
      : A(std::move(a)), Ad(std::move(ad)), h(delay) {
    if (A.rows() != A.cols() || Ad.rows() != Ad.cols() || A.rows() != Ad.rows())
      throw DimensionError("TimeDelaySystem: A and Ad must be square and equal-order");
    if (!A.allFinite() || !Ad.allFinite() || !std::isfinite(h))
      throw DimensionError("TimeDelaySystem: non-finite entries");
    if (h <= 0.0) throw DimensionError("TimeDelaySystem: delay must be positive");
  }

  Eigen::Index order() const { return A.rows(); }
};

/// Time-delay system whose delayed matrix has the rank-one form b c^T.
struct RankOneDelaySystem {
  Mat A;
  Vec b;
  Vec c;
  double h;

  RankOneDelaySystem(Mat a, Vec b_in, Vec c_in, double delay)
      : A(std::move(a)), b(std::move(b_in)), c(std::move(c_in)), h(delay) {
    if (A.rows() != A.cols())
      throw DimensionError("RankOneDelaySystem: A must be square");
    if (b.size() != A.rows() || c.size() != A.rows())
      throw DimensionError("RankOneDelaySystem: b and c must have the system order");
    if (!A.allFinite() || !b.allFinite() || !c.allFinite() || !std::isfinite(h))
      throw DimensionError("RankOneDelaySystem: non-finite entries");
    if (h <= 0.0)
      throw DimensionError("RankOneDelaySystem: delay must be positive");
  }

  Eigen::Index order() const { return A.rows(); }
  Mat delayed_matrix() const { return b * c.transpose(); }
  TimeDelaySystem full() const { return TimeDelaySystem(A, delayed_matrix(), h); }
};

/// System in common canonical form: A companion, Ad zero except its last
/// row. Stored as the two defining rows.
struct CCFormSystem {
  Vec a;   // last row of the companion A
  Vec ad;  // last row of Ad
  double h;

  CCFormSystem(Vec a_row, Vec ad_row, double delay)
      : a(std::move(a_row)), ad(std::move(ad_row)), h(delay) {
    if (a.size() != ad.size() || a.size() < 1)
      throw DimensionError("CCFormSystem: rows must be non-empty and equal length");
    if (!a.allFinite() || !ad.allFinite() || !std::isfinite(h))
      throw DimensionError("CCFormSystem: non-finite entries");
    if (h <= 0.0) throw DimensionError("CCFormSystem: delay must be positive");
  }

  Eigen::Index order() const { return a.size(); }
  Mat A() const { return companion_matrix(a); }

  Mat Ad() const {
    const Eigen::Index n = order();
    Mat m = Mat::Zero(n, n);
    m.row(n - 1) = ad.transpose();
    return m;
  }

  TimeDelaySystem full() const { return TimeDelaySystem(A(), Ad(), h); }
};

/// Invertible change of coordinates x = T z.
struct Transformation {
  Mat T;
  Mat T_inv;
};

/// Recognizes common canonical structure: A companion (unit superdiagonal,
/// zero elsewhere off the last row) and Ad zero except its last row, both to
/// the entrywise tolerance. Any first-order system qualifies.
inline std::optional<CCFormSystem> is_cc_form(const TimeDelaySystem& sys,
                                              double tol = kCCFormTol) {
  const Eigen::Index n = sys.order();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double want = (j == i + 1) ? 1.0 : 0.0;
      if (std::abs(sys.A(i, j) - want) > tol) return std::nullopt;
    }
  }
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(sys.Ad(i, j)) > tol) return std::nullopt;
  return CCFormSystem(sys.A.row(n - 1).transpose(), sys.Ad.row(n - 1).transpose(),
                      sys.h);
}

/// Controllability matrix [b, A b, ..., A^{n-1} b].
inline Mat controllability_matrix(const Mat& a, const Vec& b) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw DimensionError("controllability_matrix: dimension mismatch");
  const Eigen::Index n = a.rows();
  Mat u(n, n);
  Vec col = b;
  for (Eigen::Index j = 0; j < n; ++j) {
    u.col(j) = col;
    col = a * col;
  }
  return u;
}

/// Transforms a rank-one-delay system to common canonical form through its
/// controllability pair (A, b). Returns the coordinate change x = T z and
/// the transformed system. Throws UncontrollableError (with the achieved
/// rank) when (A, b) is not controllable to the 1e-10 singular-value test.
inline std::pair<Transformation, CCFormSystem> to_cc_form(
    const RankOneDelaySystem& sys) {
  const Eigen::Index n = sys.order();
  const Mat u = controllability_matrix(sys.A, sys.b);
  const int rank = numerical_rank(u, 1e-10);
  if (rank < n)
    throw UncontrollableError(
        "to_cc_form: controllability matrix has rank " + std::to_string(rank) +
            " < " + std::to_string(n),
        rank, static_cast<int>(n));

  const Vec coeffs = characteristic_polynomial(sys.A);
  const Vec a_row = -coeffs;
  const Mat a_bar = companion_matrix(a_row);
  Vec b_bar = Vec::Zero(n);
  b_bar(n - 1) = 1.0;
  const Mat uc = controllability_matrix(a_bar, b_bar);

  // T Uc = U and T_inv U = Uc, solved through the transposed systems.
  const Mat t = solve_linear(uc.transpose(), u.transpose()).transpose();
  const Mat t_inv = solve_linear(u.transpose(), uc.transpose()).transpose();

  const Vec b_check = t_inv * sys.b;
  if ((b_check - b_bar).cwiseAbs().maxCoeff() > 1e-8)
    throw ConvergenceError(
        "to_cc_form: transformed input column deviates from the unit vector", 0);

  const Vec ad_row = (sys.c.transpose() * t).transpose();
  return {Transformation{t, t_inv}, CCFormSystem(a_row, ad_row, sys.h)};
}

/// Factors the delayed matrix of a general system as b c^T. Rank-zero
/// matrices give b = c = 0; matrices of rank above one are rejected.
inline RankOneDelaySystem rank_one_from(const TimeDelaySystem& sys) {
  const Eigen::Index n = sys.order();
  Eigen::JacobiSVD<Mat> svd(sys.Ad, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double tol = static_cast<double>(n) *
                     std::numeric_limits<double>::epsilon() *
                     (sv.size() > 0 ? sv(0) : 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  if (rank > 1)
    throw DimensionError("rank_one_from: delayed matrix has rank " +
                         std::to_string(rank) + ", expected at most one");
  if (rank == 0)
    return RankOneDelaySystem(sys.A, Vec::Zero(n), Vec::Zero(n), sys.h);
  Vec b = svd.matrixU().col(0) * sv(0);
  Vec c = svd.matrixV().col(0);
  Eigen::Index imax = 0;
  c.cwiseAbs().maxCoeff(&imax);
  if (c(imax) < 0.0) {
    b = -b;
    c = -c;
  }
  return RankOneDelaySystem(sys.A, b, c, sys.h);
}

/// Characteristic function det(lambda I - A - Ad e^{-lambda h}).
inline cplx characteristic_function(const TimeDelaySystem& sys, cplx lambda) {
  const Eigen::Index n = sys.order();
  CMat m = -sys.A.cast<cplx>() - std::exp(-lambda * sys.h) * sys.Ad.cast<cplx>();
  m.diagonal().array() += lambda;
  return Eigen::PartialPivLU<CMat>(m).determinant();
}

namespace detail {

/// Horner evaluation of coeffs[0] + coeffs[1] x + ... + coeffs[n-1] x^{n-1}.
inline cplx horner(const Vec& coeffs, cplx x) {
  cplx acc(0.0, 0.0);
  for (Eigen::Index i = coeffs.size() - 1; i >= 0; --i) acc = acc * x + coeffs(i);
  return acc;
}

inline double horner_abs(const Vec& coeffs, double x) {
  double acc = 0.0;
  for (Eigen::Index i = coeffs.size() - 1; i >= 0; --i)
    acc = acc * x + std::abs(coeffs(i));
  return acc;
}

}  // namespace detail

/// Characteristic quasipolynomial of a CC-form system in closed form:
/// lambda^n - sum_i a_i lambda^{i-1} - e^{-lambda h} sum_i ad_i lambda^{i-1}.
inline cplx characteristic_function(const CCFormSystem& sys, cplx lambda) {
  const auto n = static_cast<int>(sys.order());
  return std::pow(lambda, n) - detail::horner(sys.a, lambda) -
         std::exp(-lambda * sys.h) * detail::horner(sys.ad, lambda);
}

/// Reusable characteristic-function handle: the map itself plus a local
/// magnitude scale (floored at one) for relative residual tests, the
/// polynomial degree, and a real-coefficients marker.
struct CharFunction {
  std::function<cplx(cplx)> eval;
  std::function<double(cplx)> scale;
  int degree = 1;
  bool real_coefficients = true;
};

inline CharFunction char_function(const CCFormSystem& sys) {
  const auto n = static_cast<int>(sys.order());
  const Vec a = sys.a;
  const Vec ad = sys.ad;
  const double h = sys.h;
  CharFunction f;
  f.degree = n;
  f.eval = [n, a, ad, h](cplx lambda) {
    return std::pow(lambda, n) - detail::horner(a, lambda) -
           std::exp(-lambda * h) * detail::horner(ad, lambda);
  };
  f.scale = [n, a, ad, h](cplx lambda) {
    const double r = std::abs(lambda);
    const double s = std::pow(r, n) + detail::horner_abs(a, r) +
                     std::exp(-lambda.real() * h) * detail::horner_abs(ad, r);
    return std::max(1.0, s);
  };
  return f;
}

inline CharFunction char_function(const TimeDelaySystem& sys) {
  const auto n = static_cast<int>(sys.order());
  const TimeDelaySystem s = sys;
  const double row_a = sys.A.cwiseAbs().rowwise().sum().maxCoeff();
  const double row_ad = sys.Ad.cwiseAbs().rowwise().sum().maxCoeff();
  CharFunction f;
  f.degree = n;
  f.eval = [s](cplx lambda) { return characteristic_function(s, lambda); };
  f.scale = [n, row_a, row_ad, h = sys.h](cplx lambda) {
    const double per_row =
        std::abs(lambda) + row_a + std::exp(-lambda.real() * h) * row_ad;
    return std::max(1.0, std::pow(per_row, n));
  };
  return f;
}

}  // namespace tdlw
