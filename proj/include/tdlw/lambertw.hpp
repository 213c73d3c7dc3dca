#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <utility>

#include "tdlw/types.hpp"

namespace tdlw {

/// Branch point of the Lambert W function, -1/e.
inline const double kLambertBranchPoint = -std::exp(-1.0);

/// Below this magnitude the trailing entry of a CC matrix is treated as zero
/// and the scaled Lambert map degenerates to the identity.
inline constexpr double kCCZeroTail = 1e-12;

/// True when w can lie in the range of branch k. The asymptotic horizontal
/// strip is Im(w) in ((2k-1)*pi, (2k+1)*pi], but next to the branch cut each
/// range extends one half-strip toward the real axis (W_{-1} is real on
/// (-1/e, 0), W_{+1} reaches the real axis from above, W_{+-2} dip past
/// +-3*pi, and so on), so the bound facing the real axis is widened by pi.
inline bool in_branch_strip(int k, cplx w, double tol = 1e-8) {
  const double pi = std::numbers::pi;
  double lo = (2.0 * k - 1.0) * pi;
  double hi = (2.0 * k + 1.0) * pi;
  if (k >= 1) lo -= pi;
  if (k <= -1) hi += pi;
  return w.imag() > lo - tol && w.imag() <= hi + tol;
}

namespace detail {

/// Halley iteration for w*exp(w) = z. Returns true on convergence.
inline bool halley_w(cplx z, cplx& w, int max_iter = 100) {
  for (int i = 0; i < max_iter; ++i) {
    const cplx ew = std::exp(w);
    const cplx f = w * ew - z;
    if (std::abs(f) <= 1e-15 * std::max(1.0, std::abs(z))) return true;
    const cplx wp1 = w + 1.0;
    if (std::abs(wp1) < 1e-12)
      return std::abs(f) <= 1e-11 * std::max(1.0, std::abs(z));
    const cplx denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (denom == cplx(0.0)) return false;
    const cplx dw = f / denom;
    w -= dw;
    if (std::abs(dw) <= 1e-14 * (1.0 + std::abs(w))) return true;
  }
  const cplx f = w * std::exp(w) - z;
  return std::abs(f) <= 1e-12 * std::max(1.0, std::abs(z));
}

/// Three-term branch-point expansion w = -1 + p - p^2/3 + 11 p^3/72 with
/// p = sign * sqrt(2 (e z + 1)).
inline cplx branch_point_series(cplx z, double sign) {
  const cplx p = sign * std::sqrt(2.0 * (std::exp(1.0) * z + 1.0));
  return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
}

/// Rejects converged values that satisfy the identity but belong to a
/// neighbouring branch (possible for arguments near the real axis, where
/// several branches take nearby values).
inline bool branch_plausible(int k, cplx w) {
  if (!in_branch_strip(k, w)) return false;
  const double near_axis = 1e-9;
  if (k == 0 && w.real() < -1.0 - near_axis && std::abs(w.imag()) < near_axis)
    return false;  // real values below -1 belong to branch -1
  if (k == -1 && w.real() > -1.0 + 1e-9 && std::abs(w.imag()) < near_axis)
    return false;  // real values above -1 belong to branch 0
  return true;
}

}  // namespace detail

/// Lambert W on branch k evaluated at complex z. Halley iteration from an
/// asymptotic seed, switching to the branch-point series seed when
/// |1 + e z| < 1e-6. The result satisfies w*exp(w) = z and lies in the
/// branch-k range.
inline cplx lambert_w(int k, cplx z) {
  const double pi = std::numbers::pi;
  if (z == cplx(0.0)) {
    if (k == 0) return cplx(0.0);
    throw DomainError("lambert_w: branch " + std::to_string(k) +
                      " is unbounded at z = 0");
  }
  const double near_bp = std::abs(std::exp(1.0) * z + 1.0);

  auto finish = [&](cplx w) -> std::pair<bool, cplx> {
    const bool conv = detail::halley_w(z, w);
    return {conv && detail::branch_plausible(k, w), w};
  };

  // Candidate seeds, most specific first.
  if ((k == 0 || k == -1) && near_bp < 1e-6) {
    cplx w = detail::branch_point_series(z, k == 0 ? 1.0 : -1.0);
    if (near_bp < 1e-12) return w;
    auto [ok, r] = finish(w);
    if (ok) return r;
  }
  if (k == 0 && std::abs(z) < 0.5) {
    auto [ok, r] = finish(z * (1.0 - z + 1.5 * z * z));
    if (ok) return r;
  }
  if (k == -1 && z.imag() == 0.0 && z.real() < 0.0 && z.real() > -0.1) {
    // Asymptotic seed for small negative real arguments.
    const double l = std::log(-z.real());
    auto [ok, r] = finish(cplx(l - std::log(-l), 0.0));
    if (ok) return r;
  }
  const cplx l1 = std::log(z) + cplx(0.0, 2.0 * pi * k);
  if (std::abs(l1) > 1e-3) {
    auto [ok, r] = finish(l1 - std::log(l1));
    if (ok) return r;
  }
  if (k == 0) {
    auto [ok, r] = finish(std::log(z));
    if (ok) return r;
  }
  // Fallback seeds: branch-point series of either sign, shifted logs.
  for (double sign : {1.0, -1.0}) {
    auto [ok, r] = finish(detail::branch_point_series(z, sign));
    if (ok) return r;
  }
  for (double shift : {-2.0 * pi, 2.0 * pi}) {
    auto [ok, r] = finish(l1 - std::log(l1) + cplx(0.0, shift));
    if (ok) return r;
  }
  throw ConvergenceError("lambert_w: no converging seed for branch " +
                             std::to_string(k),
                         100);
}

/// Real Lambert W on the real branches: k = 0 on [-1/e, inf),
/// k = -1 on [-1/e, 0).
inline double lambert_w_real(int k, double x) {
  if (k != 0 && k != -1)
    throw DomainError("lambert_w_real: real branches are 0 and -1, got " +
                      std::to_string(k));
  if (!std::isfinite(x)) throw DomainError("lambert_w_real: non-finite input");
  if (x < kLambertBranchPoint) {
    if (x > kLambertBranchPoint - 1e-12) {
      x = kLambertBranchPoint;
    } else {
      throw DomainError("lambert_w_real: x = " + std::to_string(x) +
                        " below the branch point -1/e");
    }
  }
  if (k == -1 && x >= 0.0)
    throw DomainError("lambert_w_real: branch -1 requires x < 0");
  if (x == 0.0) return 0.0;
  return lambert_w(k, cplx(x, 0.0)).real();
}

/// Matrix that is zero except for its last row. Closed under addition,
/// scaling, and the scaled Lambert W map used by the branch solver; its only
/// nonzero eigenvalue is the trailing entry of the row.
struct CCMatrix {
  Vec last_row;

  explicit CCMatrix(Vec row) : last_row(std::move(row)) {}
  explicit CCMatrix(Eigen::Index n) : last_row(Vec::Zero(n)) {}

  Eigen::Index order() const { return last_row.size(); }

  /// The single (possibly zero) nonzero eigenvalue, row entry n.
  double eigenvalue() const { return last_row(last_row.size() - 1); }

  Mat dense() const {
    Mat m = Mat::Zero(order(), order());
    m.row(order() - 1) = last_row.transpose();
    return m;
  }
};

/// Lambert W of a CC matrix on a real branch (k = 0 or -1).
/// With m_n the trailing entry: returns (W_k(m_n)/m_n) * M, or M unchanged
/// when |m_n| < kCCZeroTail (the principal-branch limit).
inline CCMatrix lambert_w_cc(int k, const CCMatrix& m) {
  if (k != 0 && k != -1)
    throw DomainError("lambert_w_cc: real branches are 0 and -1, got " +
                      std::to_string(k));
  if (!m.last_row.allFinite())
    throw DimensionError("lambert_w_cc: non-finite entries");
  const double mn = m.eigenvalue();
  if (std::abs(mn) < kCCZeroTail) return m;
  if (k == -1 && mn > 0.0)
    throw DomainError(
        "lambert_w_cc: branch -1 requires a negative trailing entry");
  const double w = lambert_w_real(k, mn);
  return CCMatrix(Vec(m.last_row * (w / mn)));
}

}  // namespace tdlw
