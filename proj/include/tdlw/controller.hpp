#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tdlw/linalg.hpp"
#include "tdlw/model.hpp"
#include "tdlw/spectrum.hpp"
#include "tdlw/types.hpp"

namespace tdlw {

/// Single-input plant with a delayed actuation channel:
/// x'(t) = A x(t) + B u(t - h).
struct InputDelayPlant {
  Mat A;
  Vec B;
  double h;

  InputDelayPlant(Mat a, Vec b, double delay)
      : A(std::move(a)), B(std::move(b)), h(delay) {
    if (A.rows() != A.cols() || A.rows() != B.size())
      throw DimensionError("InputDelayPlant: dimension mismatch");
    if (!A.allFinite() || !B.allFinite() || !std::isfinite(h))
      throw DimensionError("InputDelayPlant: non-finite entries");
    if (h <= 0.0) throw DimensionError("InputDelayPlant: delay must be positive");
  }

  Eigen::Index order() const { return A.rows(); }
};

struct DesignOptions {
  double cond_limit = 1e12;    // condition bound on the auxiliary matrix
  double residual_tol = 1e-6;  // relative bound for the per-root check
};

struct DesignResult {
  Vec gain;                        // feedback row: u(t) = gain^T x(t)
  SolutionTriple triple;           // assigned solution matrix and Lambert data
  TimeDelaySystem closed_loop;     // resulting delayed dynamics
  std::vector<cplx> assigned;      // requested spectrum, descending real part
  std::vector<double> residuals;   // relative |p| at each assigned root
  bool verified;                   // all residuals within the design tolerance
};

/// Places the spectrum of the solution matrix for a CC-form plant whose
/// scalar input enters through the last state equation with the same delay
/// as the state: x'(t) = A x(t) + Ad x(t - h) + e_n u(t - h). The feedback
/// u = K x(t) adds K to the delayed row, so the design solves
/// h (ad + K)^T P = m_row with P recovered from the target solution matrix.
inline DesignResult assign_eigenvalues(const CCFormSystem& plant,
                                       const std::vector<cplx>& desired,
                                       const DesignOptions& opts = {}) {
  const Eigen::Index n = plant.order();
  if (static_cast<Eigen::Index>(desired.size()) != n)
    throw DimensionError(
        "assign_eigenvalues: the root count must match the plant order");

  const Mat s = companion_from_roots(desired);
  const BranchAttribution att = attribute_branch(plant, s);
  const Mat a = plant.A();
  const Mat p = recover_auxiliary(s, a, plant.h);

  Eigen::JacobiSVD<Mat> svd(p);
  const double sv_min = svd.singularValues()(n - 1);
  const double cond = sv_min > 0.0
                          ? svd.singularValues()(0) / sv_min
                          : std::numeric_limits<double>::infinity();
  if (!(cond <= opts.cond_limit))
    throw SingularMatrixError(
        "assign_eigenvalues: auxiliary matrix condition " +
            std::to_string(cond) + " exceeds the design limit",
        cond);

  // h (ad + K)^T P = m_row  =>  P^T (ad + K) = m_row / h.
  const Vec row = solve_linear(p.transpose(), Vec(att.m.last_row / plant.h));
  const Vec gain = row - plant.ad;

  const CCFormSystem closed(plant.a, Vec(plant.ad + gain), plant.h);
  DesignResult out{gain,
                   SolutionTriple{s, att.m, p, att.branch,
                                  detail::branch_equation_residual(
                                      closed, att.branch, att.m.last_row,
                                      Mat(a * plant.h))
                                      .norm(),
                                  verify_solution(closed.full(), s), 0},
                   closed.full(),
                   desired,
                   {},
                   true};
  std::sort(out.assigned.begin(), out.assigned.end(),
            [](const cplx& x, const cplx& y) {
              return detail::spectral_less(x, y);
            });

  const CharFunction pc = char_function(closed);
  out.residuals.reserve(desired.size());
  for (const cplx& r : out.assigned) {
    const double res = std::abs(pc.eval(r)) / pc.scale(r);
    out.residuals.push_back(res);
    out.verified = out.verified && res <= opts.residual_tol;
  }
  return out;
}

/// General single-input form: transforms the controllable pair (A, B) to CC
/// coordinates, designs there, and maps the gain back. The closed loop is
/// x'(t) = A x(t) + B K x(t - h).
inline DesignResult assign_eigenvalues(const InputDelayPlant& plant,
                                       const std::vector<cplx>& desired,
                                       const DesignOptions& opts = {}) {
  const Eigen::Index n = plant.order();
  const RankOneDelaySystem shell{plant.A, plant.B, Vec::Zero(n), plant.h};
  const auto [trans, cc] = to_cc_form(shell);

  DesignResult out = assign_eigenvalues(cc, desired, opts);

  // u = K_bar z = K_bar T_inv x.
  const Vec gain = (out.gain.transpose() * trans.T_inv).transpose();
  out.gain = gain;
  out.closed_loop =
      TimeDelaySystem(plant.A, Mat(plant.B * gain.transpose()), plant.h);

  // Re-verify against the closed loop in the original coordinates.
  const CharFunction pc = char_function(out.closed_loop);
  out.verified = true;
  for (size_t i = 0; i < out.assigned.size(); ++i) {
    const double res =
        std::abs(pc.eval(out.assigned[i])) / pc.scale(out.assigned[i]);
    out.residuals[i] = res;
    out.verified = out.verified && res <= opts.residual_tol;
  }
  return out;
}

}  // namespace tdlw
