#include "subshrink/forest_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace subshrink {

namespace {

constexpr double kLabelWidth = 180.0;
constexpr double kPlotWidth = 480.0;
constexpr double kRowHeight = 22.0;
constexpr double kTop = 50.0;
constexpr double kSeriesGap = 7.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

double ForestAxis::position(double value) const {
  const double v = std::clamp(value, low, high);
  return left + (std::log(v) - std::log(low)) / (std::log(high) - std::log(low)) *
                    width;
}

ForestAxis forest_axis(const ForestPlot& plot) {
  ForestAxis axis;
  axis.left = kLabelWidth;
  axis.width = kPlotWidth;
  double lo = 0.25, hi = 2.0;
  auto widen = [&](double v) {
    if (!(v > 0.0) || !std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (const auto& s : plot.series)
    for (const auto& p : s.points) {
      if (p.missing) continue;
      widen(p.effect);
      if (p.interval) {
        widen(p.interval->first);
        widen(p.interval->second);
      }
    }
  if (plot.reference) widen(*plot.reference);
  axis.low = 0.25;
  while (axis.low > lo && axis.low > 1.0 / 64.0) axis.low /= 2.0;
  axis.high = 2.0;
  while (axis.high < hi && axis.high < 64.0) axis.high *= 2.0;
  for (double t = axis.low; t <= axis.high * (1.0 + 1e-12); t *= 2.0)
    axis.ticks.push_back(t);
  return axis;
}

std::string render_forest_svg(const ForestPlot& plot) {
  const auto axis = forest_axis(plot);
  const double height = kTop + kRowHeight * static_cast<double>(plot.rows.size()) + 60.0;
  const double width = kLabelWidth + kPlotWidth + 40.0;
  const double axis_y = kTop + kRowHeight * static_cast<double>(plot.rows.size()) + 5.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
      << "\" height=\"" << fmt(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << fmt(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(plot.title) << "</text>\n";
  // Legend.
  double lx = kLabelWidth;
  for (const auto& s : plot.series) {
    svg << "<rect x=\"" << fmt(lx) << "\" y=\"30\" width=\"10\" height=\"10\" fill=\""
        << s.color << "\"/><text x=\"" << fmt(lx + 14) << "\" y=\"39\">"
        << escape(s.name) << "</text>\n";
    lx += 110.0;
  }
  // Axis and ticks.
  svg << "<line class=\"axis\" x1=\"" << fmt(axis.left) << "\" y1=\"" << fmt(axis_y)
      << "\" x2=\"" << fmt(axis.left + axis.width) << "\" y2=\"" << fmt(axis_y)
      << "\" stroke=\"black\"/>\n";
  for (double t : axis.ticks) {
    const double x = axis.position(t);
    svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(axis_y) << "\" x2=\"" << fmt(x)
        << "\" y2=\"" << fmt(axis_y + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text class=\"tick\" x=\"" << fmt(x) << "\" y=\"" << fmt(axis_y + 18)
        << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
  }
  svg << "<text x=\"" << fmt(axis.left + axis.width / 2) << "\" y=\"" << fmt(axis_y + 36)
      << "\" text-anchor=\"middle\">Hazard ratio (log scale)</text>\n";
  const double x1 = axis.position(1.0);
  svg << "<line class=\"null\" x1=\"" << fmt(x1) << "\" y1=\"" << fmt(kTop) << "\" x2=\""
      << fmt(x1) << "\" y2=\"" << fmt(axis_y) << "\" stroke=\"#999\"/>\n";
  if (plot.reference) {
    const double xr = axis.position(*plot.reference);
    svg << "<line class=\"reference\" x1=\"" << fmt(xr) << "\" y1=\"" << fmt(kTop)
        << "\" x2=\"" << fmt(xr) << "\" y2=\"" << fmt(axis_y)
        << "\" stroke=\"#555\" stroke-dasharray=\"4,3\"/>\n";
  }
  const double spread =
      kSeriesGap * static_cast<double>(plot.series.size() > 0 ? plot.series.size() - 1 : 0);
  for (std::size_t r = 0; r < plot.rows.size(); ++r) {
    const double y0 = kTop + kRowHeight * (static_cast<double>(r) + 0.5);
    svg << "<text x=\"" << fmt(kLabelWidth - 8) << "\" y=\"" << fmt(y0 + 4)
        << "\" text-anchor=\"end\">" << escape(plot.rows[r]) << "</text>\n";
    for (std::size_t s = 0; s < plot.series.size(); ++s) {
      const auto& series = plot.series[s];
      if (r >= series.points.size() || series.points[r].missing) continue;
      const auto& p = series.points[r];
      const double y = y0 - spread / 2 + kSeriesGap * static_cast<double>(s);
      if (p.interval)
        svg << "<line x1=\"" << fmt(axis.position(p.interval->first)) << "\" y1=\""
            << fmt(y) << "\" x2=\"" << fmt(axis.position(p.interval->second))
            << "\" y2=\"" << fmt(y) << "\" stroke=\"" << series.color << "\"/>\n";
      svg << "<circle cx=\"" << fmt(axis.position(p.effect)) << "\" cy=\"" << fmt(y)
          << "\" r=\"3\" fill=\"" << series.color << "\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace subshrink
