#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tdlw/model.hpp"
#include "tdlw/types.hpp"

namespace tdlw {

/// Initial data of a delay system: samples of x on [-h, 0], interpolated
/// with a cubic Lagrange rule through the four nearest samples.
struct HistorySegment {
  std::vector<double> times;
  std::vector<Vec> states;

  static HistorySegment constant(const Vec& x0, double h) {
    HistorySegment seg;
    for (int j = 0; j < 4; ++j) {
      seg.times.push_back(-h + h * j / 3.0);
      seg.states.push_back(x0);
    }
    seg.times.back() = 0.0;
    return seg;
  }

  static HistorySegment sampled(const std::function<Vec(double)>& f, double h,
                                int samples = 64) {
    if (samples < 2)
      throw DimensionError("HistorySegment: at least two samples required");
    HistorySegment seg;
    for (int j = 0; j < samples; ++j) {
      const double t = -h + h * j / (samples - 1.0);
      seg.times.push_back(t);
      seg.states.push_back(f(t));
    }
    seg.times.back() = 0.0;
    return seg;
  }

  void validate(double h) const {
    if (times.size() != states.size() || times.size() < 2)
      throw DimensionError("HistorySegment: need matching times and states");
    const double tol = 1e-9 * std::max(1.0, h);
    if (std::abs(times.front() + h) > tol || std::abs(times.back()) > tol)
      throw DimensionError("HistorySegment: samples must span [-h, 0]");
    for (size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw DimensionError("HistorySegment: times must be ascending");
    for (const Vec& x : states)
      if (!x.allFinite())
        throw DimensionError("HistorySegment: non-finite state sample");
  }

  Vec at(double t) const {
    const double lo = times.front(), hi = times.back();
    const double tol = 1e-9 * std::max(1.0, hi - lo);
    if (t < lo - tol || t > hi + tol)
      throw DomainError("HistorySegment: query outside the sampled span");
    t = std::clamp(t, lo, hi);
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    size_t right = static_cast<size_t>(std::distance(times.begin(), it));
    right = std::clamp<size_t>(right, 1, times.size() - 1);
    // Window of up to four points around the bracketing interval.
    size_t first = right > 1 ? right - 2 : 0;
    const size_t count = std::min<size_t>(4, times.size());
    first = std::min(first, times.size() - count);
    Vec acc = Vec::Zero(states.front().size());
    for (size_t i = first; i < first + count; ++i) {
      double l = 1.0;
      for (size_t j = first; j < first + count; ++j)
        if (j != i) l *= (t - times[j]) / (times[i] - times[j]);
      acc += l * states[i];
    }
    return acc;
  }
};

/// Result of a method-of-steps integration on the uniform grid t_i = i dt.
/// States and derivatives together support cubic Hermite evaluation
/// anywhere between knots.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> derivatives;
  double dt = 0.0;
  bool diverged = false;

  Vec at(double t) const {
    if (times.empty()) throw DomainError("Trajectory: empty");
    const double tol = 1e-9 * std::max(1.0, times.back());
    if (t < times.front() - tol || t > times.back() + tol)
      throw DomainError("Trajectory: query outside the integrated span");
    t = std::clamp(t, times.front(), times.back());
    const size_t i = std::min<size_t>(
        times.size() - 2, static_cast<size_t>(std::max(0.0, t / dt)));
    const double theta = (t - times[i]) / dt;
    const double t2 = theta * theta, t3 = t2 * theta;
    return (2 * t3 - 3 * t2 + 1) * states[i] +
           (t3 - 2 * t2 + theta) * dt * derivatives[i] +
           (-2 * t3 + 3 * t2) * states[i + 1] +
           (t3 - t2) * dt * derivatives[i + 1];
  }
};

/// Classical fourth-order integration of x'(t) = A x(t) + Ad x(t - h) by the
/// method of steps. The step is snapped down so the delay is a whole number
/// of steps; delayed values at half-steps come from cubic Hermite
/// interpolation of already-computed knots, so the delayed input never runs
/// ahead of the solution. Requested steps above h/10 are rejected. On
/// numerical blow-up the trajectory is truncated and flagged instead of
/// throwing.
inline Trajectory integrate(const TimeDelaySystem& sys,
                            const HistorySegment& history, double t_end,
                            double dt_request) {
  if (!(t_end > 0.0) || !std::isfinite(t_end))
    throw DomainError("integrate: end time must be positive");
  if (!(dt_request > 0.0) || !std::isfinite(dt_request))
    throw DomainError("integrate: step must be positive");
  if (dt_request > sys.h / 10.0 + 1e-15)
    throw DomainError("integrate: step must be at most a tenth of the delay");
  history.validate(sys.h);
  if (history.states.front().size() != sys.order())
    throw DimensionError("integrate: history dimension mismatch");

  const auto m = static_cast<size_t>(std::ceil(sys.h / dt_request - 1e-12));
  const double dt = sys.h / static_cast<double>(m);
  const auto steps = static_cast<size_t>(std::ceil(t_end / dt - 1e-12));

  Trajectory traj;
  traj.dt = dt;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.derivatives.reserve(steps + 1);

  // Delayed state at time u <= t_current: history for u <= 0, Hermite
  // between integrated knots otherwise.
  auto delayed = [&](double u) -> Vec {
    if (u <= 0.0) return history.at(u);
    const auto i = std::min<size_t>(traj.states.size() - 2,
                                    static_cast<size_t>(u / dt));
    const double theta = (u - traj.times[i]) / dt;
    const double t2 = theta * theta, t3 = t2 * theta;
    return (2 * t3 - 3 * t2 + 1) * traj.states[i] +
           (t3 - 2 * t2 + theta) * dt * traj.derivatives[i] +
           (-2 * t3 + 3 * t2) * traj.states[i + 1] +
           (t3 - t2) * dt * traj.derivatives[i + 1];
  };
  auto rhs = [&](const Vec& x, const Vec& xd) -> Vec {
    return sys.A * x + sys.Ad * xd;
  };

  Vec x = history.states.back();
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  traj.derivatives.push_back(rhs(x, history.at(-sys.h)));

  for (size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    // Delayed samples land on or between knots i - m and i - m + 1.
    const Vec d0 = delayed(t - sys.h);
    const Vec dmid = delayed(t + 0.5 * dt - sys.h);
    const Vec d1 = delayed(t + dt - sys.h);

    const Vec k1 = rhs(x, d0);
    const Vec k2 = rhs(Vec(x + 0.5 * dt * k1), dmid);
    const Vec k3 = rhs(Vec(x + 0.5 * dt * k2), dmid);
    const Vec k4 = rhs(Vec(x + dt * k3), d1);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (!x.allFinite() || x.norm() > 1e150) {
      traj.diverged = true;
      break;
    }
    traj.times.push_back(static_cast<double>(i + 1) * dt);
    traj.states.push_back(x);
    traj.derivatives.push_back(rhs(x, d1));
  }
  return traj;
}

/// Least-squares slope of ln |x(t)| over the knots in [t0, t1]. Zero-norm
/// knots are skipped; at least two usable knots are required.
inline double decay_rate(const Trajectory& traj, double t0, double t1) {
  if (!(t1 > t0)) throw DomainError("decay_rate: empty window");
  double st = 0, sy = 0, stt = 0, sty = 0;
  size_t count = 0;
  for (size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    if (t < t0 || t > t1) continue;
    const double norm = traj.states[i].norm();
    if (norm <= 0.0) continue;
    const double y = std::log(norm);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++count;
  }
  if (count < 2)
    throw DomainError("decay_rate: fewer than two usable samples in window");
  const double denom = stt - st * st / count;
  if (denom <= 0.0) throw DomainError("decay_rate: degenerate time window");
  return (sty - st * sy / count) / denom;
}

/// Decay rate fitted only through the local maxima of |x(t)|, which tracks
/// the envelope of oscillatory responses.
inline double envelope_decay_rate(const Trajectory& traj, double t0,
                                  double t1) {
  if (!(t1 > t0)) throw DomainError("envelope_decay_rate: empty window");
  double st = 0, sy = 0, stt = 0, sty = 0;
  size_t count = 0;
  for (size_t i = 1; i + 1 < traj.times.size(); ++i) {
    const double t = traj.times[i];
    if (t < t0 || t > t1) continue;
    const double norm = traj.states[i].norm();
    if (norm <= 0.0 || norm < traj.states[i - 1].norm() ||
        norm < traj.states[i + 1].norm())
      continue;
    const double y = std::log(norm);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++count;
  }
  if (count < 2)
    throw DomainError("envelope_decay_rate: fewer than two peaks in window");
  const double denom = stt - st * st / count;
  if (denom <= 0.0)
    throw DomainError("envelope_decay_rate: degenerate time window");
  return (sty - st * sy / count) / denom;
}

}  // namespace tdlw
