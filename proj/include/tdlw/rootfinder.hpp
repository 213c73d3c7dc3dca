#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "tdlw/model.hpp"
#include "tdlw/types.hpp"

namespace tdlw {

/// Rectangle in the complex plane.
struct SearchRegion {
  double re_min;
  double re_max;
  double im_min;
  double im_max;
};

struct LocatedRoot {
  cplx value;
  double residual;   // |p| at the polished root
  int multiplicity;  // winding number of the final enclosing cell
};

struct RootFinderOptions {
  double grid_step = 0.25;
  double cell_diameter = 1e-3;  // subdivision stop before Newton polish
  double residual_tol = 1e-9;   // acceptance, relative to the local scale
  int max_evaluations = 40000000;
};

namespace detail {

inline double wrap_angle(double d) {
  const double pi = std::numbers::pi;
  while (d > pi) d -= 2.0 * pi;
  while (d <= -pi) d += 2.0 * pi;
  return d;
}

struct ContourWalk {
  const CharFunction& p;
  const RootFinderOptions& opts;
  long long evals = 0;
  bool boundary_hit = false;  // a sample landed on (numerically) a zero
  cplx hit_point;

  cplx eval(cplx z) {
    if (++evals > opts.max_evaluations)
      throw ConvergenceError("find_roots: evaluation budget exhausted",
                             static_cast<int>(evals));
    return p.eval(z);
  }

  /// Accumulated argument change along the segment, with adaptive midpoint
  /// refinement while consecutive phase jumps exceed pi/2.
  double segment_arg(cplx z1, cplx p1, cplx z2, cplx p2, int depth) {
    const double tiny = 1e-13 * p.scale(z1);
    if (std::abs(p1) < tiny || std::abs(p2) < tiny) {
      boundary_hit = true;
      hit_point = std::abs(p1) < std::abs(p2) ? z1 : z2;
      return 0.0;
    }
    const double d = wrap_angle(std::arg(p2) - std::arg(p1));
    if (std::abs(d) <= 0.5 * std::numbers::pi || depth >= 40) return d;
    const cplx zm = 0.5 * (z1 + z2);
    const cplx pm = eval(zm);
    return segment_arg(z1, p1, zm, pm, depth + 1) +
           segment_arg(zm, pm, z2, p2, depth + 1);
  }

  /// Winding number of p around the rectangle boundary, walked
  /// counterclockwise. Sets boundary_hit when a zero sits on the contour.
  /// Returns the rounded winding; `exact` reports whether the fractional
  /// part was below 0.1.
  int winding(const SearchRegion& r, bool& exact) {
    const cplx corners[5] = {cplx(r.re_min, r.im_min), cplx(r.re_max, r.im_min),
                             cplx(r.re_max, r.im_max), cplx(r.re_min, r.im_max),
                             cplx(r.re_min, r.im_min)};
    double total = 0.0;
    boundary_hit = false;
    for (int e = 0; e < 4; ++e) {
      const cplx a = corners[e];
      const cplx b = corners[e + 1];
      const double len = std::abs(b - a);
      const int samples =
          std::max(16, static_cast<int>(std::ceil(len / opts.grid_step * 4.0)));
      cplx zp = a;
      cplx pp = eval(zp);
      for (int i = 1; i <= samples; ++i) {
        const cplx z = a + (b - a) * (static_cast<double>(i) / samples);
        const cplx pz = eval(z);
        total += segment_arg(zp, pp, z, pz, 0);
        if (boundary_hit) return 0;
        zp = z;
        pp = pz;
      }
    }
    const double turns = total / (2.0 * std::numbers::pi);
    const int w = static_cast<int>(std::lround(turns));
    exact = std::abs(turns - w) < 0.1;
    return w;
  }
};

/// Newton polish with a certified finish: central-difference derivative,
/// damped steps, escape detection.
inline std::optional<LocatedRoot> polish_root(const CharFunction& p, cplx z,
                                              const SearchRegion& region,
                                              const RootFinderOptions& opts,
                                              int multiplicity) {
  const double margin = 4.0 * opts.grid_step;
  for (int it = 0; it < 100; ++it) {
    const cplx pz = p.eval(z);
    if (std::abs(pz) <= 1e-12 * p.scale(z)) break;
    const double step = 1e-6 * std::max(1.0, std::abs(z));
    const cplx dp = (p.eval(z + step) - p.eval(z - step)) / (2.0 * step);
    if (dp == cplx(0.0)) break;
    cplx dz = pz / dp;
    // Damp enormous steps (derivative near zero next to a multiple root).
    const double max_step = 10.0 * opts.grid_step;
    if (std::abs(dz) > max_step) dz *= max_step / std::abs(dz);
    z -= dz;
    if (z.real() < region.re_min - margin || z.real() > region.re_max + margin ||
        z.imag() < region.im_min - margin || z.imag() > region.im_max + margin)
      return std::nullopt;  // escaped the search region
    if (std::abs(dz) <= 1e-15 * (1.0 + std::abs(z))) break;
  }
  const double res = std::abs(p.eval(z));
  if (res > opts.residual_tol * p.scale(z)) return std::nullopt;
  if (z.real() < region.re_min - 1e-9 || z.real() > region.re_max + 1e-9 ||
      z.imag() < region.im_min - 1e-9 || z.imag() > region.im_max + 1e-9)
    return std::nullopt;
  return LocatedRoot{z, res, multiplicity};
}

inline void subdivide(ContourWalk& walk, const CharFunction& p,
                      const SearchRegion& cell, const SearchRegion& full,
                      const RootFinderOptions& opts,
                      std::vector<LocatedRoot>& out) {
  const double w = cell.re_max - cell.re_min;
  const double h = cell.im_max - cell.im_min;
  bool exact = false;
  int wind = walk.winding(cell, exact);
  if (walk.boundary_hit) {
    // A zero sits (numerically) on the contour: polish straight from the hit.
    if (auto r = polish_root(p, walk.hit_point, full, opts, 1)) out.push_back(*r);
    // Nudge the cell outward slightly to count interior roots cleanly.
    SearchRegion nudged{cell.re_min - 0.131 * w, cell.re_max + 0.117 * w,
                        cell.im_min - 0.123 * h, cell.im_max + 0.109 * h};
    wind = walk.winding(nudged, exact);
    if (walk.boundary_hit) return;  // give up on this cell; neighbors cover it
  }
  if (wind == 0 && exact) return;
  if (std::hypot(w, h) < opts.cell_diameter) {
    const cplx center(0.5 * (cell.re_min + cell.re_max),
                      0.5 * (cell.im_min + cell.im_max));
    if (auto r = polish_root(p, center, full, opts, std::max(1, std::abs(wind))))
      out.push_back(*r);
    return;
  }
  const double rm = 0.5 * (cell.re_min + cell.re_max);
  const double im = 0.5 * (cell.im_min + cell.im_max);
  subdivide(walk, p, {cell.re_min, rm, cell.im_min, im}, full, opts, out);
  subdivide(walk, p, {rm, cell.re_max, cell.im_min, im}, full, opts, out);
  subdivide(walk, p, {cell.re_min, rm, im, cell.im_max}, full, opts, out);
  subdivide(walk, p, {rm, cell.re_max, im, cell.im_max}, full, opts, out);
}

}  // namespace detail

/// All zeros of p inside the region, by argument-principle winding counts on
/// a grid, quadtree subdivision, and Newton polish. For real-coefficient
/// functions, conjugates of found roots are mirrored into the result and the
/// returned set is exactly conjugate-symmetric. Roots are sorted by
/// descending real part, then descending imaginary part.
inline std::vector<LocatedRoot> find_roots(const CharFunction& p,
                                           SearchRegion region,
                                           RootFinderOptions opts = {}) {
  if (!(region.re_min < region.re_max) || !(region.im_min < region.im_max))
    throw DimensionError("find_roots: empty search region");
  if (!(opts.grid_step > 0.0))
    throw DimensionError("find_roots: grid step must be positive");

  // A region that starts exactly on the real axis would run cell edges
  // through every real root; extend it a fraction of a cell downward.
  if (p.real_coefficients && region.im_min == 0.0)
    region.im_min = -0.1234 * opts.grid_step;

  detail::ContourWalk walk{p, opts};
  std::vector<LocatedRoot> raw;
  const int nx = std::max(
      1, static_cast<int>(std::ceil((region.re_max - region.re_min) / opts.grid_step)));
  const int ny = std::max(
      1, static_cast<int>(std::ceil((region.im_max - region.im_min) / opts.grid_step)));
  const double dx = (region.re_max - region.re_min) / nx;
  const double dy = (region.im_max - region.im_min) / ny;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const SearchRegion cell{region.re_min + i * dx, region.re_min + (i + 1) * dx,
                              region.im_min + j * dy, region.im_min + (j + 1) * dy};
      detail::subdivide(walk, p, cell, region, opts, raw);
    }
  }

  // Snap near-real roots onto the axis for real-coefficient functions.
  if (p.real_coefficients)
    for (auto& r : raw)
      if (std::abs(r.value.imag()) < 1e-9 * std::max(1.0, std::abs(r.value)))
        r.value = cplx(r.value.real(), 0.0);

  // Deduplicate (adjacent cells can polish to the same zero).
  std::vector<LocatedRoot> roots;
  for (const auto& r : raw) {
    bool merged = false;
    for (auto& kept : roots) {
      if (std::abs(kept.value - r.value) <
          1e-6 * std::max(1.0, std::abs(r.value))) {
        if (r.residual < kept.residual) kept.value = r.value;
        kept.residual = std::min(kept.residual, r.residual);
        kept.multiplicity = std::max(kept.multiplicity, r.multiplicity);
        merged = true;
        break;
      }
    }
    if (!merged) roots.push_back(r);
  }

  if (p.real_coefficients) {
    // Mirror conjugates (even when the mirror lies outside the searched
    // rectangle) and make kept pairs exactly symmetric.
    std::vector<LocatedRoot> mirrored = roots;
    for (const auto& r : roots) {
      if (r.value.imag() == 0.0) continue;
      const cplx conj_val = std::conj(r.value);
      bool found = false;
      for (const auto& m : mirrored) {
        if (std::abs(m.value - conj_val) <
            1e-6 * std::max(1.0, std::abs(conj_val))) {
          found = true;
          break;
        }
      }
      if (!found)
        mirrored.push_back(LocatedRoot{conj_val, std::abs(p.eval(conj_val)),
                                       r.multiplicity});
    }
    roots = std::move(mirrored);
    for (auto& r : roots) {
      if (r.value.imag() <= 0.0) continue;
      for (auto& m : roots) {
        if (m.value.imag() < 0.0 &&
            std::abs(m.value - std::conj(r.value)) <
                1e-6 * std::max(1.0, std::abs(r.value))) {
          const cplx sym = 0.5 * (r.value + std::conj(m.value));
          r.value = sym;
          m.value = std::conj(sym);
        }
      }
    }
  }

  std::sort(roots.begin(), roots.end(),
            [](const LocatedRoot& a, const LocatedRoot& b) {
              return detail::spectral_less(a.value, b.value);
            });
  return roots;
}

/// The root with the largest real part in the region, if any.
inline std::optional<LocatedRoot> rightmost_root(const CharFunction& p,
                                                 SearchRegion region,
                                                 RootFinderOptions opts = {}) {
  const auto roots = find_roots(p, region, opts);
  if (roots.empty()) return std::nullopt;
  return roots.front();
}

}  // namespace tdlw
