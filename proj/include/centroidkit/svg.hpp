#pragma once

#include <string>
#include <vector>

namespace centroidkit {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  ///< points instead of a polyline
  bool dashed = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
};

/// Renders a line chart as a standalone SVG document. Output depends only on
/// the plot contents. Non-finite points (and non-positive ones on log axes)
/// are skipped; a plot without any drawable point renders an empty frame.
std::string render_svg(const Plot& plot);

}  // namespace centroidkit
