#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "tdlw/lambertw.hpp"
#include "tdlw/linalg.hpp"
#include "tdlw/model.hpp"
#include "tdlw/rootfinder.hpp"
#include "tdlw/types.hpp"

namespace tdlw {

/// Companion matrix whose spectrum is the given conjugate-closed root set.
/// The polynomial is expanded in complex arithmetic and the imaginary parts
/// (which cancel for conjugate-closed input) are dropped.
inline Mat companion_from_roots(const std::vector<cplx>& roots,
                                double closure_tol = 1e-8) {
  const size_t n = roots.size();
  if (n == 0) throw DimensionError("companion_from_roots: empty root set");
  std::vector<cplx> conj_set(n);
  std::transform(roots.begin(), roots.end(), conj_set.begin(),
                 [](cplx z) { return std::conj(z); });
  // Conjugate closure: every root's conjugate appears in the multiset.
  std::vector<bool> used(n, false);
  for (const cplx& z : conj_set) {
    bool matched = false;
    for (size_t j = 0; j < n; ++j) {
      if (!used[j] &&
          std::abs(roots[j] - z) <= closure_tol * std::max(1.0, std::abs(z))) {
        used[j] = true;
        matched = true;
        break;
      }
    }
    if (!matched)
      throw DimensionError(
          "companion_from_roots: root set is not conjugate-closed");
  }

  std::vector<cplx> coeffs{cplx(1.0, 0.0)};  // descending powers, monic
  for (const cplx& r : roots) {
    std::vector<cplx> next(coeffs.size() + 1, cplx(0.0, 0.0));
    for (size_t i = 0; i < coeffs.size(); ++i) {
      next[i] += coeffs[i];
      next[i + 1] -= coeffs[i] * r;
    }
    coeffs = std::move(next);
  }
  Vec row(static_cast<Eigen::Index>(n));
  for (size_t i = 1; i <= n; ++i) {
    // coeff of x^{n-i} is coeffs[i]; the companion row holds its negation,
    // stored with ascending powers.
    row(static_cast<Eigen::Index>(n - i)) = -coeffs[i].real();
  }
  return companion_matrix(row);
}

/// Triple produced by the nonlinear branch solver.
struct SolutionTriple {
  Mat solution;             // S: the matrix whose spectrum is the root set
  CCMatrix lambert_arg;     // M: argument handed to the Lambert map
  Mat auxiliary;            // P: e^{-S h} e^{(S - A) h}
  int branch;               // k
  double residual_nonlinear;      // |W(M) e^{W(M)+A h} - Ad h| last row
  double residual_characteristic; // |S - A - Ad e^{-S h}|
  int iterations;
};

struct BranchAttribution {
  int branch;    // k, chosen from the trailing Lambert row entry
  CCMatrix m;    // the inferred Lambert argument
  Vec w_row;     // last row of W = h (S - A)
};

/// Infers the Lambert argument and branch index that produce a candidate
/// solution matrix S for the CC system: W_row = h (s_row - a_row),
/// m_i = w_i e^{w_n}, with branch 0 when w_n >= -1 and branch -1 otherwise.
inline BranchAttribution attribute_branch(const CCFormSystem& sys, const Mat& s) {
  const Eigen::Index n = sys.order();
  if (s.rows() != n || s.cols() != n)
    throw DimensionError("attribute_branch: order mismatch");
  if (!s.allFinite()) throw DimensionError("attribute_branch: non-finite entries");
  const Vec w_row = sys.h * (s.row(n - 1).transpose() - sys.a);
  const double wn = w_row(n - 1);
  const int k = wn >= -1.0 ? 0 : -1;
  const Vec m_row = w_row * std::exp(wn);
  return BranchAttribution{k, CCMatrix(m_row), w_row};
}

/// The auxiliary matrix of a solution: P = e^{-S h} e^{(S - A) h}.
inline Mat recover_auxiliary(const Mat& s, const Mat& a, double h) {
  if (s.rows() != s.cols() || a.rows() != a.cols() || s.rows() != a.rows())
    throw DimensionError("recover_auxiliary: order mismatch");
  if (!std::isfinite(h) || h <= 0.0)
    throw DimensionError("recover_auxiliary: delay must be positive");
  return mat_exp(Mat(-s * h)) * mat_exp(Mat((s - a) * h));
}

/// Minimum-norm auxiliary matrix solving Ad * P = M / h, via the
/// pseudo-inverse. Rejects targets outside the row space of Ad.
inline Mat min_norm_auxiliary(const Mat& ad, const CCMatrix& m, double h) {
  if (ad.rows() != ad.cols() || ad.rows() != m.order())
    throw DimensionError("min_norm_auxiliary: order mismatch");
  if (!std::isfinite(h) || h <= 0.0)
    throw DimensionError("min_norm_auxiliary: delay must be positive");
  const Mat target = m.dense() / h;
  const Mat p = pseudo_inverse(ad) * target;
  const double scale = std::max(1.0, target.norm());
  if ((ad * p - target).norm() > 1e-8 * scale)
    throw DomainError(
        "min_norm_auxiliary: target is outside the range of the delayed matrix");
  return p;
}

/// Residual of the defining matrix equation at S:
/// |S - A - Ad e^{-S h}|_F.
inline double verify_solution(const TimeDelaySystem& sys, const Mat& s) {
  if (s.rows() != sys.order() || s.cols() != sys.order())
    throw DimensionError("verify_solution: order mismatch");
  return (s - sys.A - sys.Ad * mat_exp(Mat(-s * sys.h))).norm();
}

struct SolverOptions {
  int max_iterations = 100;
  double tolerance = 1e-9;  // relative to max(1, |Ad h|)
};

namespace detail {

/// Last row of W e^{W + A h} - Ad h as a function of the last row of M.
/// Only the last row is nonzero, so these n entries are the full residual.
inline Vec branch_equation_residual(const CCFormSystem& sys, int k,
                                    const Vec& m_row, const Mat& ah) {
  const CCMatrix w = lambert_w_cc(k, CCMatrix(m_row));
  const Mat e = mat_exp(Mat(w.dense() + ah));
  return Vec(e.transpose() * w.last_row - sys.h * sys.ad);
}

inline bool branch_domain_ok(int k, double mn) {
  if (std::abs(mn) < kCCZeroTail) return true;
  if (mn < kLambertBranchPoint) return false;
  if (k == -1 && mn > 0.0) return false;
  return true;
}

}  // namespace detail

/// Newton iteration on the last row of M for the branch-k matrix equation
/// W_k(M) e^{W_k(M) + A h} = Ad h. The Jacobian is formed by central
/// differences; steps are halved (up to 20 times) when the residual does not
/// decrease or the iterate leaves the branch domain.
inline SolutionTriple solve_branch_equation(const CCFormSystem& sys, int k,
                                            const CCMatrix& m_init,
                                            SolverOptions opts = {}) {
  const Eigen::Index n = sys.order();
  if (m_init.order() != n)
    throw DimensionError("solve_branch_equation: order mismatch");
  const Mat a = sys.A();
  const Mat ah = a * sys.h;
  const double tol =
      opts.tolerance * std::max(1.0, sys.h * sys.ad.norm());

  Vec m_row = m_init.last_row;
  if (!detail::branch_domain_ok(k, m_row(n - 1)))
    throw DomainError(
        "solve_branch_equation: seed outside the branch domain");

  Vec r = detail::branch_equation_residual(sys, k, m_row, ah);
  int iterations = 0;
  while (r.norm() > tol) {
    if (++iterations > opts.max_iterations)
      throw ConvergenceError("solve_branch_equation: no convergence after " +
                                 std::to_string(opts.max_iterations) +
                                 " iterations",
                             opts.max_iterations);
    Mat jac(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double step = 1e-7 * std::max(1.0, std::abs(m_row(j)));
      Vec plus = m_row, minus = m_row;
      plus(j) += step;
      minus(j) -= step;
      const bool ok_p = detail::branch_domain_ok(k, plus(n - 1));
      const bool ok_m = detail::branch_domain_ok(k, minus(n - 1));
      if (ok_p && ok_m) {
        jac.col(j) = (detail::branch_equation_residual(sys, k, plus, ah) -
                      detail::branch_equation_residual(sys, k, minus, ah)) /
                     (2.0 * step);
      } else if (ok_p) {
        jac.col(j) =
            (detail::branch_equation_residual(sys, k, plus, ah) - r) / step;
      } else {
        jac.col(j) =
            (r - detail::branch_equation_residual(sys, k, minus, ah)) / step;
      }
    }
    Vec delta;
    try {
      delta = solve_linear(jac, Vec(-r));
    } catch (const SingularMatrixError&) {
      throw ConvergenceError(
          "solve_branch_equation: singular Jacobian at iteration " +
              std::to_string(iterations),
          iterations);
    }
    double t = 1.0;
    bool stepped = false;
    for (int halving = 0; halving < 20; ++halving) {
      Vec trial = m_row + t * delta;
      if (detail::branch_domain_ok(k, trial(n - 1))) {
        Vec rt = detail::branch_equation_residual(sys, k, trial, ah);
        if (rt.norm() < r.norm()) {
          m_row = std::move(trial);
          r = std::move(rt);
          stepped = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!stepped)
      throw ConvergenceError(
          "solve_branch_equation: line search stalled at iteration " +
              std::to_string(iterations),
          iterations);
  }

  const CCMatrix m(m_row);
  const CCMatrix w = lambert_w_cc(k, m);
  const Mat s = a + w.dense() / sys.h;
  SolutionTriple out{s,
                     m,
                     recover_auxiliary(s, a, sys.h),
                     k,
                     r.norm(),
                     verify_solution(sys.full(), s),
                     iterations};
  return out;
}

/// Convenience overload: seed the solver from a branch attribution.
inline SolutionTriple solve_branch_equation(const CCFormSystem& sys,
                                            const BranchAttribution& seed,
                                            SolverOptions opts = {}) {
  return solve_branch_equation(sys, seed.branch, seed.m, opts);
}

/// One attributed root set from a spectrum scan.
struct BranchedRootSet {
  std::vector<cplx> roots;  // exactly order-many, descending real part
  int branch;
  CCMatrix m;
  Vec w_row;
  double max_residual;  // worst |p| over the set's located roots
};

struct ScanResult {
  std::vector<LocatedRoot> located;   // every root found in the region
  std::vector<BranchedRootSet> sets;  // attributed groups of order-many roots
  std::vector<cplx> ungrouped;        // roots no parity-feasible set covers
};

struct ScanOptions {
  RootFinderOptions rootfinder;
  bool group = true;
};

namespace detail {

/// Indivisible grouping unit: a real root or a conjugate pair.
struct RootUnit {
  std::vector<cplx> members;
  double max_residual;
  bool covered = false;
};

}  // namespace detail

/// Locates all characteristic roots in the region and groups them into
/// order-sized, conjugate-closed sets attributed to Lambert branches.
/// Grouping slides from the dominant roots leftward; a unit that cannot be
/// completed forward borrows the nearest units above it. Roots that no
/// parity-feasible window covers are reported ungrouped but stay in
/// `located`.
inline ScanResult spectrum_scan(const CCFormSystem& sys, SearchRegion region,
                                ScanOptions opts = {}) {
  const auto n = static_cast<size_t>(sys.order());
  ScanResult out;
  out.located = find_roots(char_function(sys), region, opts.rootfinder);
  if (!opts.group) return out;

  // Build units from the located list (descending order): a real root
  // stands alone; a +imag root pairs with its mirrored conjugate.
  std::vector<detail::RootUnit> units;
  for (const auto& r : out.located) {
    if (r.value.imag() < 0.0) continue;
    detail::RootUnit u;
    if (r.value.imag() == 0.0) {
      u.members = {r.value};
      u.max_residual = r.residual;
    } else {
      u.members = {r.value, std::conj(r.value)};
      u.max_residual = r.residual;
      for (const auto& s : out.located)
        if (s.value == std::conj(r.value))
          u.max_residual = std::max(u.max_residual, s.residual);
    }
    units.push_back(std::move(u));
  }

  auto emit = [&](const std::vector<size_t>& idx) {
    std::vector<cplx> roots;
    double res = 0.0;
    for (size_t i : idx) {
      for (const cplx& z : units[i].members) roots.push_back(z);
      res = std::max(res, units[i].max_residual);
      units[i].covered = true;
    }
    std::sort(roots.begin(), roots.end(), [](const cplx& a, const cplx& b) {
      return detail::spectral_less(a, b);
    });
    const Mat s = companion_from_roots(roots);
    BranchAttribution attr = attribute_branch(sys, s);
    out.sets.push_back(BranchedRootSet{std::move(roots), attr.branch,
                                       std::move(attr.m), std::move(attr.w_row),
                                       res});
  };

  // Forward pass: greedy fill of descending windows, skipping units that
  // do not fit the remaining capacity.
  std::vector<size_t> window;
  size_t fill = 0;
  for (size_t i = 0; i < units.size(); ++i) {
    if (fill + units[i].members.size() > n) continue;
    window.push_back(i);
    fill += units[i].members.size();
    if (fill == n) {
      emit(window);
      window.clear();
      fill = 0;
    }
  }

  // Backward pass: complete uncovered units by borrowing the nearest units
  // above them.
  for (size_t i = 0; i < units.size(); ++i) {
    if (units[i].covered) continue;
    std::vector<size_t> idx{i};
    size_t size = units[i].members.size();
    if (size <= n) {
      for (size_t j = i; j-- > 0 && size < n;) {
        if (size + units[j].members.size() > n) continue;
        idx.push_back(j);
        size += units[j].members.size();
      }
    }
    if (size == n) {
      std::sort(idx.begin(), idx.end());
      emit(idx);
    } else {
      for (const cplx& z : units[i].members) out.ungrouped.push_back(z);
    }
  }

  // Drop duplicate sets (the passes can rebuild an identical window).
  std::vector<BranchedRootSet> unique_sets;
  for (auto& s : out.sets) {
    bool dup = false;
    for (const auto& kept : unique_sets) {
      if (kept.roots.size() == s.roots.size()) {
        double d = 0.0;
        for (size_t i = 0; i < s.roots.size(); ++i)
          d = std::max(d, std::abs(kept.roots[i] - s.roots[i]));
        if (d < 1e-12) {
          dup = true;
          break;
        }
      }
    }
    if (!dup) unique_sets.push_back(std::move(s));
  }
  out.sets = std::move(unique_sets);
  return out;
}

}  // namespace tdlw
