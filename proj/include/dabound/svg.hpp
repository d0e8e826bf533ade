#pragma once

#include <string>
#include <vector>

namespace dab {

struct SvgSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
};

// Deterministic line chart (no timestamps, fixed formatting). log_x uses a
// log10 axis; nonpositive x values are invalid there.
std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& title,
                           bool log_x, const std::string& x_label, const std::string& y_label);

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  int label = 0;   // color
  int domain = 0;  // 0: circle (source), 1: square (target)
};

std::string svg_scatter(const std::vector<ScatterPoint>& points, const std::string& title);

}  // namespace dab
