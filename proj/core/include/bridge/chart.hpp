#pragma once

#include <string>
#include <utility>
#include <vector>

namespace bridge {

struct ChartSeries {
  std::string label;
  std::string color;
  // Drawn as a polyline in the given order.
  std::vector<std::pair<double, double>> line;
  // Drawn as unconnected markers.
  std::vector<std::pair<double, double>> markers;
};

struct ChartLayout {
  std::string title;
  std::string x_label;
  std::string y_label;
  // Written into the <desc> element.
  std::string description;
  int width = 640;
  int height = 400;
};

// Static SVG line chart with a legend; axis ranges cover every point.
std::string line_chart_svg(const ChartLayout& layout, const std::vector<ChartSeries>& series);

}  // namespace bridge
