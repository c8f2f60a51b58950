#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace subshrink {

struct ForestPoint {
  bool missing = false;
  double effect = 1.0;  // hazard-ratio scale
  std::optional<std::pair<double, double>> interval;
};

struct ForestSeries {
  std::string name;
  std::string color;
  std::vector<ForestPoint> points;  // one per row
};

struct ForestPlot {
  std::string title;
  std::vector<std::string> rows;
  std::vector<ForestSeries> series;
  std::optional<double> reference;  // vertical line, e.g. population estimate
};

// Horizontal log-scaled axis; ticks always include 0.25, 0.5, 1 and 2 and
// extend by powers of two when the data require.
std::string render_forest_svg(const ForestPlot& plot);

// Axis geometry shared with the renderer.
struct ForestAxis {
  double low = 0.25;
  double high = 2.0;
  double left = 0.0;
  double width = 0.0;
  std::vector<double> ticks;
  double position(double value) const;
};

ForestAxis forest_axis(const ForestPlot& plot);

}  // namespace subshrink
