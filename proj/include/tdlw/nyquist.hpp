#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tdlw/model.hpp"
#include "tdlw/rootfinder.hpp"
#include "tdlw/types.hpp"

namespace tdlw {

struct NyquistOptions {
  double omega_max = 50.0;   // half-width of the frequency sweep
  int initial_samples = 4001;
  double closure_tol = 0.05; // endpoint distance from 1 accepted as closed
  int max_doublings = 10;    // omega_max growth retries for tail closure
  int max_depth = 30;        // adaptive phase refinement depth
  long max_evaluations = 2000000;
};

/// A frequency sweep of F(w) = p(shift + i w) / (1 + i w)^n. The contour is
/// the vertical line Re = shift traversed upward, closed through the point 1
/// at infinity; its winding number about the origin is minus the number of
/// characteristic roots strictly to the right of the line.
struct NyquistCurve {
  std::vector<double> omegas;
  std::vector<cplx> values;
  double shift = 0.0;
  double omega_max = 0.0;        // after any closure doublings
  int winding = 0;               // signed turns about the origin
  double winding_fraction = 0.0; // distance from the nearest whole turn
  double min_distance = 0.0;     // closest approach to the origin (refined)
  double min_omega = 0.0;        // frequency of the closest approach
  double median_modulus = 0.0;   // scale of the curve
  bool indeterminate = false;    // winding did not settle on an integer
};

namespace detail {

class NyquistSweeper {
 public:
  NyquistSweeper(const CharFunction& p, double shift,
                 const NyquistOptions& opts)
      : p_(p), shift_(shift), opts_(opts) {}

  cplx value(double omega) {
    if (++evaluations_ > opts_.max_evaluations)
      throw ConvergenceError("nyquist_sweep: evaluation budget exhausted",
                             static_cast<int>(evaluations_));
    const cplx z(shift_, omega);
    return p_.eval(z) / std::pow(cplx(1.0, omega), p_.degree);
  }

  NyquistCurve run() {
    double omega_max = opts_.omega_max;
    for (int attempt = 0;; ++attempt) {
      const cplx head = value(-omega_max);
      const cplx tail = value(omega_max);
      if ((std::abs(head - 1.0) <= opts_.closure_tol &&
           std::abs(tail - 1.0) <= opts_.closure_tol) ||
          attempt >= opts_.max_doublings)
        break;
      omega_max *= 2.0;
    }

    NyquistCurve out;
    out.shift = shift_;
    out.omega_max = omega_max;

    const int n0 = std::max(opts_.initial_samples, 3);
    out.omegas.reserve(n0);
    out.values.reserve(n0);
    double prev_omega = -omega_max;
    cplx prev_value = value(prev_omega);
    out.omegas.push_back(prev_omega);
    out.values.push_back(prev_value);
    double turn = 0.0;
    for (int i = 1; i < n0; ++i) {
      const double omega =
          -omega_max + 2.0 * omega_max * static_cast<double>(i) / (n0 - 1);
      const cplx v = value(omega);
      turn += segment(prev_omega, prev_value, omega, v, opts_.max_depth, out);
      out.omegas.push_back(omega);
      out.values.push_back(v);
      prev_omega = omega;
      prev_value = v;
    }
    // Closure through the point at infinity, where F = 1 exactly.
    turn += wrap_angle(std::arg(out.values.front()) -
                       std::arg(out.values.back()));

    const double turns = turn / (2.0 * M_PI);
    out.winding = static_cast<int>(std::lround(turns));
    out.winding_fraction = std::abs(turns - out.winding);
    out.indeterminate = out.winding_fraction > 0.1;

    finish_minimum(out);
    finish_median(out);
    return out;
  }

 private:
  /// Accumulated argument change from (w1,v1) to (w2,v2), subdividing while
  /// the wrapped jump exceeds pi/2. Interior samples are appended to `out`.
  double segment(double w1, const cplx& v1, double w2, const cplx& v2,
                 int depth, NyquistCurve& out) {
    const double jump = wrap_angle(std::arg(v2) - std::arg(v1));
    if (std::abs(jump) <= M_PI / 2.0 || depth <= 0 ||
        (w2 - w1) <= 1e-12 * std::max(1.0, std::abs(w1)))
      return jump;
    const double mid = 0.5 * (w1 + w2);
    const cplx vm = value(mid);
    const double left = segment(w1, v1, mid, vm, depth - 1, out);
    out.omegas.push_back(mid);
    out.values.push_back(vm);
    return left + segment(mid, vm, w2, v2, depth - 1, out);
  }

  /// Ternary search refinement of |F| around every sampled local minimum.
  void finish_minimum(NyquistCurve& out) {
    // Samples were appended out of order during refinement; sort them.
    std::vector<size_t> perm(out.omegas.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](size_t a, size_t b) {
      return out.omegas[a] < out.omegas[b];
    });
    std::vector<double> omegas(perm.size());
    std::vector<cplx> values(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) {
      omegas[i] = out.omegas[perm[i]];
      values[i] = out.values[perm[i]];
    }
    out.omegas = std::move(omegas);
    out.values = std::move(values);

    double best = std::abs(out.values.front());
    double best_omega = out.omegas.front();
    for (size_t i = 0; i < out.omegas.size(); ++i) {
      const double m = std::abs(out.values[i]);
      const bool local_min =
          (i == 0 || m <= std::abs(out.values[i - 1])) &&
          (i + 1 == out.omegas.size() || m <= std::abs(out.values[i + 1]));
      if (!local_min) {
        if (m < best) {
          best = m;
          best_omega = out.omegas[i];
        }
        continue;
      }
      double lo = out.omegas[i > 0 ? i - 1 : i];
      double hi = out.omegas[i + 1 < out.omegas.size() ? i + 1 : i];
      for (int iter = 0; iter < 80 && hi - lo > 1e-15 * (1.0 + std::abs(lo));
           ++iter) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (std::abs(value(m1)) < std::abs(value(m2)))
          hi = m2;
        else
          lo = m1;
      }
      const double w = 0.5 * (lo + hi);
      const double m_ref = std::abs(value(w));
      if (m_ref < best) {
        best = m_ref;
        best_omega = w;
      }
    }
    out.min_distance = best;
    out.min_omega = best_omega;

    // Record the refined closest approach in the sample list.
    const auto it =
        std::lower_bound(out.omegas.begin(), out.omegas.end(), best_omega);
    const auto pos = std::distance(out.omegas.begin(), it);
    if (it == out.omegas.end() || *it != best_omega) {
      out.omegas.insert(it, best_omega);
      out.values.insert(out.values.begin() + pos, value(best_omega));
    }
  }

  void finish_median(NyquistCurve& out) const {
    std::vector<double> mods(out.values.size());
    std::transform(out.values.begin(), out.values.end(), mods.begin(),
                   [](const cplx& v) { return std::abs(v); });
    const size_t mid = mods.size() / 2;
    std::nth_element(mods.begin(), mods.begin() + mid, mods.end());
    out.median_modulus = mods[mid];
  }

  const CharFunction& p_;
  double shift_;
  const NyquistOptions& opts_;
  long evaluations_ = 0;
};

}  // namespace detail

inline NyquistCurve nyquist_sweep(const CharFunction& p, double shift,
                                  const NyquistOptions& opts = {}) {
  if (p.degree < 1)
    throw DimensionError("nyquist_sweep: characteristic degree must be >= 1");
  if (!std::isfinite(shift))
    throw DomainError("nyquist_sweep: shift must be finite");
  detail::NyquistSweeper sweeper(p, shift, opts);
  return sweeper.run();
}

/// Certificate that lambda_star is the rightmost characteristic root:
/// the boundary sweep through Re(lambda_star) must pass through the origin
/// (a root on the line), while the sweep shifted right by mu must avoid the
/// origin without encircling it (no roots beyond the line).
struct CertificationResult {
  bool certified = false;
  NyquistCurve boundary;
  NyquistCurve interior;
  double boundary_tol = 0.0;  // closest-approach threshold for condition one
  std::string reason;         // empty when certified
};

inline CertificationResult certify_rightmost(const CharFunction& p,
                                             cplx lambda_star, double mu,
                                             NyquistOptions opts = {}) {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw DomainError("certify_rightmost: mu must be positive");
  if (!std::isfinite(lambda_star.real()) || !std::isfinite(lambda_star.imag()))
    throw DomainError("certify_rightmost: candidate root must be finite");
  opts.omega_max = std::max(
      opts.omega_max, 10.0 * (1.0 + std::abs(lambda_star.imag())));

  CertificationResult out;
  out.boundary = nyquist_sweep(p, lambda_star.real(), opts);
  out.interior = nyquist_sweep(p, lambda_star.real() + mu, opts);
  out.boundary_tol = 1e-4 * std::max(out.boundary.median_modulus,
                                     std::numeric_limits<double>::min());

  if (out.boundary.min_distance > out.boundary_tol) {
    out.reason = "no root detected on the candidate line (closest approach " +
                 std::to_string(out.boundary.min_distance) + ")";
    return out;
  }
  if (out.interior.indeterminate) {
    out.reason = "winding on the shifted line did not settle on an integer";
    return out;
  }
  if (out.interior.winding != 0) {
    out.reason = std::to_string(-out.interior.winding) +
                 " root(s) lie to the right of the shifted line";
    return out;
  }
  if (out.interior.min_distance <= 10.0 * out.boundary_tol) {
    out.reason = "shifted line passes too close to a root; increase mu";
    return out;
  }
  out.certified = true;
  return out;
}

enum class Verdict { stable, unstable, indeterminate };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    default: return "indeterminate";
  }
}

/// Imaginary-axis sweep with an independent rootfinder cross-check.
struct StabilityResult {
  Verdict verdict = Verdict::indeterminate;
  NyquistCurve curve;      // sweep along the imaginary axis
  int roots_right = 0;     // roots in the open right half-plane per winding
  std::optional<LocatedRoot> rightmost;  // from the cross-check region
  bool cross_checked = false;            // rootfinder agrees with the verdict
};

inline StabilityResult stability_verdict(
    const CharFunction& p,
    SearchRegion cross_check_region = SearchRegion{-10.0, 2.0, 0.0, 50.0},
    const NyquistOptions& opts = {}) {
  StabilityResult out;
  out.curve = nyquist_sweep(p, 0.0, opts);
  const double margin = 1e-9 * std::max(out.curve.median_modulus, 1e-300);
  if (out.curve.indeterminate || out.curve.min_distance <= margin) {
    out.verdict = Verdict::indeterminate;
  } else {
    out.roots_right = -out.curve.winding;
    out.verdict = out.roots_right == 0 ? Verdict::stable : Verdict::unstable;
  }

  out.rightmost = rightmost_root(p, cross_check_region);
  if (out.verdict == Verdict::indeterminate) {
    out.cross_checked = false;
  } else if (out.rightmost.has_value()) {
    const bool right = out.rightmost->value.real() > 0.0;
    out.cross_checked = right == (out.verdict == Verdict::unstable);
  } else {
    // No roots in the probe region: consistent only with stability.
    out.cross_checked = out.verdict == Verdict::stable;
  }
  return out;
}

inline StabilityResult stability_verdict(
    const CCFormSystem& sys,
    SearchRegion cross_check_region = SearchRegion{-10.0, 2.0, 0.0, 50.0},
    const NyquistOptions& opts = {}) {
  return stability_verdict(char_function(sys), cross_check_region, opts);
}

}  // namespace tdlw
