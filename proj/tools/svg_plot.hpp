#pragma once

#include <string>
#include <vector>

namespace voliv::plot {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  // points instead of a polyline
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::vector<Series> series;
};

// Standalone SVG with axes, ticks, one polyline or marker set per series and
// a legend. Non-finite points are skipped.
std::string render_svg(const Figure& fig);

}  // namespace voliv::plot
