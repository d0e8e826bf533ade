#include "dabound/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "dabound/common.hpp"

namespace dab {

namespace {

constexpr int kWidth = 640, kHeight = 440;
constexpr int kLeft = 70, kRight = 610, kTop = 50, kBottom = 390;

const char* kPalette[10] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      const double m = 0.05 * (hi - lo);
      lo -= m;
      hi += m;
    }
  }
};

}  // namespace

std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& title,
                           bool log_x, const std::string& x_label, const std::string& y_label) {
  Range xr, yr;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      double x = s.xs[i];
      if (log_x) {
        if (!(x > 0.0)) throw ValidationError("log axis requires positive x values");
        x = std::log10(x);
      }
      xr.add(x);
      yr.add(s.ys[i]);
    }
  if (series.empty() || !std::isfinite(xr.lo)) throw ValidationError("nothing to plot");
  xr.pad();
  yr.pad();
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kRight - kLeft); };
  auto py = [&](double y) { return kBottom - (y - yr.lo) / (yr.hi - yr.lo) * (kBottom - kTop); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
         "\" height=\"" + std::to_string(kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         title + "</text>\n";
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(kRight) +
         "\" y2=\"" + num(kBottom) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kBottom) + "\" stroke=\"black\"/>\n";

  for (int t = 0; t <= 5; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / 5.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * t / 5.0;
    out += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(kBottom + 18) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + (log_x ? "1e" + num(fx) : num(fx)) + "</text>\n";
    out += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py(fy) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + num(fy) + "</text>\n";
  }
  out += "<text x=\"" + std::to_string((kLeft + kRight) / 2) + "\" y=\"" + std::to_string(kHeight - 8) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + x_label + "</text>\n";
  out += "<text x=\"16\" y=\"" + std::to_string((kTop + kBottom) / 2) +
         "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
         std::to_string((kTop + kBottom) / 2) + ")\">" + y_label + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % 10];
    std::string pts;
    for (std::size_t i = 0; i < series[s].xs.size(); ++i) {
      double x = log_x ? std::log10(series[s].xs[i]) : series[s].xs[i];
      pts += num(px(x)) + "," + num(py(series[s].ys[i])) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" +
           pts + "\"/>\n";
    const double ly = kTop + 16.0 * s;
    out += "<line x1=\"" + num(kRight - 150) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(kRight - 126) +
           "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(kRight - 120) + "\" y=\"" + num(ly + 4) + "\" font-size=\"12\">" +
           series[s].label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string svg_scatter(const std::vector<ScatterPoint>& points, const std::string& title) {
  if (points.empty()) throw ValidationError("nothing to plot");
  Range xr, yr;
  for (const auto& p : points) {
    xr.add(p.x);
    yr.add(p.y);
  }
  xr.pad();
  yr.pad();
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kRight - kLeft); };
  auto py = [&](double y) { return kBottom - (y - yr.lo) / (yr.hi - yr.lo) * (kBottom - kTop); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
         "\" height=\"" + std::to_string(kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         title + "</text>\n";
  for (const auto& p : points) {
    const char* color = kPalette[p.label % 10];
    if (p.domain == 0) {
      out += "<circle cx=\"" + num(px(p.x)) + "\" cy=\"" + num(py(p.y)) +
             "\" r=\"3.5\" fill=\"" + color + "\" fill-opacity=\"0.8\"/>\n";
    } else {
      out += "<rect x=\"" + num(px(p.x) - 3.0) + "\" y=\"" + num(py(p.y) - 3.0) +
             "\" width=\"6\" height=\"6\" fill=\"" + color + "\" fill-opacity=\"0.8\"/>\n";
    }
  }
  out += "<circle cx=\"" + num(kRight - 140) + "\" cy=\"" + num(kTop) + "\" r=\"3.5\" fill=\"#444\"/>\n";
  out += "<text x=\"" + num(kRight - 130) + "\" y=\"" + num(kTop + 4) + "\" font-size=\"12\">source</text>\n";
  out += "<rect x=\"" + num(kRight - 143) + "\" y=\"" + num(kTop + 13) + "\" width=\"6\" height=\"6\" fill=\"#444\"/>\n";
  out += "<text x=\"" + num(kRight - 130) + "\" y=\"" + num(kTop + 20) + "\" font-size=\"12\">target</text>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace dab
