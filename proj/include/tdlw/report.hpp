#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "tdlw/nyquist.hpp"
#include "tdlw/rootfinder.hpp"
#include "tdlw/simulate.hpp"
#include "tdlw/types.hpp"

namespace tdlw {

namespace detail {

inline std::string fmt(double v, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

/// Minimal self-contained SVG plot: fixed frame, linear axes with ticks,
/// polyline and scatter series.
class SvgCanvas {
 public:
  SvgCanvas(double x_min, double x_max, double y_min, double y_max,
            std::string x_label, std::string y_label)
      : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max),
        x_label_(std::move(x_label)), y_label_(std::move(y_label)) {
    pad(x_min_, x_max_);
    pad(y_min_, y_max_);
  }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& color) {
    std::string pts;
    for (size_t i = 0; i < xs.size(); ++i) {
      pts += fmt(px(xs[i]), "%.2f");
      pts += ",";
      pts += fmt(py(ys[i]), "%.2f");
      pts += " ";
    }
    body_ += "<polyline fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  }

  void scatter(const std::vector<double>& xs, const std::vector<double>& ys,
               const std::string& color, double radius = 4.0) {
    for (size_t i = 0; i < xs.size(); ++i) {
      body_ += "<circle cx=\"" + fmt(px(xs[i]), "%.2f") + "\" cy=\"" +
               fmt(py(ys[i]), "%.2f") + "\" r=\"" + fmt(radius, "%.1f") +
               "\" fill=\"" + color + "\" fill-opacity=\"0.85\"/>\n";
    }
  }

  void marker(double x, double y, const std::string& color) {
    const double cx = px(x), cy = py(y);
    body_ += "<path d=\"M" + fmt(cx - 5, "%.2f") + " " + fmt(cy, "%.2f") +
             " H" + fmt(cx + 5, "%.2f") + " M" + fmt(cx, "%.2f") + " " +
             fmt(cy - 5, "%.2f") + " V" + fmt(cy + 5, "%.2f") +
             "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
  }

  void legend(const std::vector<std::pair<std::string, std::string>>& items) {
    double y = kTop + 16;
    for (const auto& [label, color] : items) {
      body_ += "<rect x=\"" + fmt(kLeft + 10, "%.0f") + "\" y=\"" +
               fmt(y - 9, "%.0f") +
               "\" width=\"14\" height=\"4\" fill=\"" + color + "\"/>\n";
      body_ += "<text x=\"" + fmt(kLeft + 30, "%.0f") + "\" y=\"" +
               fmt(y, "%.0f") + "\" font-size=\"12\">" + label + "</text>\n";
      y += 18;
    }
  }

  std::string render(const std::string& title) const {
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" "
           "height=\"480\" viewBox=\"0 0 720 480\" font-family=\"sans-serif\">\n";
    out += "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
    out += "<text x=\"360\" y=\"24\" text-anchor=\"middle\" "
           "font-size=\"15\">" + title + "</text>\n";
    out += axes();
    out += body_;
    out += "</svg>\n";
    return out;
  }

 private:
  static constexpr double kLeft = 64, kRight = 700, kTop = 40, kBottom = 432;

  static void pad(double& lo, double& hi) {
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double span = hi - lo;
    lo -= 0.05 * span;
    hi += 0.05 * span;
  }

  double px(double x) const {
    return kLeft + (x - x_min_) / (x_max_ - x_min_) * (kRight - kLeft);
  }
  double py(double y) const {
    return kBottom - (y - y_min_) / (y_max_ - y_min_) * (kBottom - kTop);
  }

  std::string axes() const {
    std::string out;
    out += "<rect x=\"" + fmt(kLeft, "%.0f") + "\" y=\"" + fmt(kTop, "%.0f") +
           "\" width=\"" + fmt(kRight - kLeft, "%.0f") + "\" height=\"" +
           fmt(kBottom - kTop, "%.0f") +
           "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 5; ++i) {
      const double fx = x_min_ + (x_max_ - x_min_) * i / 5.0;
      const double fy = y_min_ + (y_max_ - y_min_) * i / 5.0;
      const double tx = px(fx), ty = py(fy);
      out += "<line x1=\"" + fmt(tx, "%.1f") + "\" y1=\"" +
             fmt(kBottom, "%.0f") + "\" x2=\"" + fmt(tx, "%.1f") +
             "\" y2=\"" + fmt(kBottom + 5, "%.0f") +
             "\" stroke=\"#444\"/>\n";
      out += "<text x=\"" + fmt(tx, "%.1f") + "\" y=\"" +
             fmt(kBottom + 18, "%.0f") +
             "\" text-anchor=\"middle\" font-size=\"11\">" + fmt(fx, "%.4g") +
             "</text>\n";
      out += "<line x1=\"" + fmt(kLeft - 5, "%.0f") + "\" y1=\"" +
             fmt(ty, "%.1f") + "\" x2=\"" + fmt(kLeft, "%.0f") + "\" y2=\"" +
             fmt(ty, "%.1f") + "\" stroke=\"#444\"/>\n";
      out += "<text x=\"" + fmt(kLeft - 8, "%.0f") + "\" y=\"" +
             fmt(ty + 4, "%.1f") +
             "\" text-anchor=\"end\" font-size=\"11\">" + fmt(fy, "%.4g") +
             "</text>\n";
    }
    out += "<text x=\"" + fmt(0.5 * (kLeft + kRight), "%.0f") +
           "\" y=\"470\" text-anchor=\"middle\" font-size=\"13\">" + x_label_ +
           "</text>\n";
    out += "<text x=\"16\" y=\"" + fmt(0.5 * (kTop + kBottom), "%.0f") +
           "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 "
           "16 " + fmt(0.5 * (kTop + kBottom), "%.0f") + ")\">" + y_label_ +
           "</text>\n";
    return out;
  }

  double x_min_, x_max_, y_min_, y_max_;
  std::string x_label_, y_label_;
  std::string body_;
};

}  // namespace detail

inline void write_roots_csv(const std::string& path,
                            const std::vector<LocatedRoot>& roots) {
  auto out = detail::open_out(path);
  out << "re,im,residual,multiplicity\n";
  for (const auto& r : roots)
    out << detail::fmt(r.value.real()) << "," << detail::fmt(r.value.imag())
        << "," << detail::fmt(r.residual) << "," << r.multiplicity << "\n";
}

inline void write_spectrum_svg(const std::string& path,
                               const std::vector<LocatedRoot>& roots,
                               const SearchRegion& region) {
  detail::SvgCanvas canvas(region.re_min, region.re_max,
                           std::min(region.im_min, -region.im_max),
                           region.im_max, "Re", "Im");
  std::vector<double> xs, ys;
  for (const auto& r : roots) {
    xs.push_back(r.value.real());
    ys.push_back(r.value.imag());
  }
  canvas.polyline({0.0, 0.0},
                  {std::min(region.im_min, -region.im_max), region.im_max},
                  "#bbb");
  canvas.scatter(xs, ys, "#b03030");
  detail::open_out(path) << canvas.render("characteristic roots");
}

inline void write_curve_csv(const std::string& path,
                            const NyquistCurve& curve) {
  auto out = detail::open_out(path);
  out << "omega,re,im,modulus\n";
  for (size_t i = 0; i < curve.omegas.size(); ++i)
    out << detail::fmt(curve.omegas[i]) << ","
        << detail::fmt(curve.values[i].real()) << ","
        << detail::fmt(curve.values[i].imag()) << ","
        << detail::fmt(std::abs(curve.values[i])) << "\n";
}

inline void write_nyquist_svg(
    const std::string& path,
    const std::vector<std::pair<const NyquistCurve*, std::string>>& curves) {
  double lo_x = 0.0, hi_x = 1.0, lo_y = 0.0, hi_y = 0.0;
  for (const auto& [curve, label] : curves) {
    for (const cplx& v : curve->values) {
      lo_x = std::min(lo_x, v.real());
      hi_x = std::max(hi_x, v.real());
      lo_y = std::min(lo_y, v.imag());
      hi_y = std::max(hi_y, v.imag());
    }
  }
  detail::SvgCanvas canvas(lo_x, hi_x, lo_y, hi_y, "Re F", "Im F");
  const std::vector<std::string> palette{"#3465a4", "#d07020", "#208050"};
  std::vector<std::pair<std::string, std::string>> legend;
  for (size_t i = 0; i < curves.size(); ++i) {
    std::vector<double> xs, ys;
    for (const cplx& v : curves[i].first->values) {
      xs.push_back(v.real());
      ys.push_back(v.imag());
    }
    const std::string color = palette[i % palette.size()];
    canvas.polyline(xs, ys, color);
    legend.emplace_back(curves[i].second, color);
  }
  canvas.marker(0.0, 0.0, "#b03030");
  canvas.marker(1.0, 0.0, "#666");
  canvas.legend(legend);
  detail::open_out(path) << canvas.render("frequency sweep");
}

inline void write_trajectory_csv(const std::string& path,
                                 const Trajectory& traj) {
  auto out = detail::open_out(path);
  out << "t";
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
  for (Eigen::Index j = 0; j < n; ++j) out << ",x" << (j + 1);
  out << ",norm\n";
  for (size_t i = 0; i < traj.times.size(); ++i) {
    out << detail::fmt(traj.times[i]);
    for (Eigen::Index j = 0; j < n; ++j)
      out << "," << detail::fmt(traj.states[i](j));
    out << "," << detail::fmt(traj.states[i].norm()) << "\n";
  }
}

inline void write_trajectory_svg(const std::string& path,
                                 const Trajectory& traj) {
  std::vector<double> ts, logs;
  for (size_t i = 0; i < traj.times.size(); ++i) {
    const double norm = traj.states[i].norm();
    if (norm <= 0.0) continue;
    ts.push_back(traj.times[i]);
    logs.push_back(std::log10(norm));
  }
  double lo = -1.0, hi = 1.0;
  if (!logs.empty()) {
    lo = *std::min_element(logs.begin(), logs.end());
    hi = *std::max_element(logs.begin(), logs.end());
  }
  detail::SvgCanvas canvas(0.0, ts.empty() ? 1.0 : ts.back(), lo, hi, "t",
                           "log10 |x|");
  canvas.polyline(ts, logs, "#3465a4");
  detail::open_out(path) << canvas.render("state norm");
}

}  // namespace tdlw
