#include "bridge/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace bridge {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string line_chart_svg(const ChartLayout& layout, const std::vector<ChartSeries>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (const auto* pts : {&s.line, &s.markers}) {
      for (const auto& [x, y] : *pts) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;

  const double left = 60, right = 150, top = 40, bottom = 50;
  const double pw = layout.width - left - right;
  const double ph = layout.height - top - bottom;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << layout.width << "\" height=\""
    << layout.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<desc>" << escape(layout.description) << "</desc>\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(layout.title) << "</text>\n";
  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
    << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double fy = y0 + (y1 - y0) * i / 4.0;
    o << "<text x=\"" << num(sx(fx)) << "\" y=\"" << num(top + ph + 16)
      << "\" text-anchor=\"middle\">" << tick(fx) << "</text>\n";
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(fy) + 4)
      << "\" text-anchor=\"end\">" << tick(fy) << "</text>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(layout.height - 10)
    << "\" text-anchor=\"middle\">" << escape(layout.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << num(top + ph / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << escape(layout.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    o << "<g class=\"series\" data-label=\"" << escape(s.label) << "\">\n";
    if (!s.line.empty()) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t p = 0; p < s.line.size(); ++p) {
        o << (p ? " " : "") << num(sx(s.line[p].first)) << "," << num(sy(s.line[p].second));
      }
      o << "\"/>\n";
    }
    for (const auto& [x, y] : s.markers) {
      o << "<circle cx=\"" << num(sx(x)) << "\" cy=\"" << num(sy(y)) << "\" r=\"2.5\" fill=\""
        << s.color << "\" fill-opacity=\"0.5\"/>\n";
    }
    const double ly = top + 16 + 20.0 * static_cast<double>(i);
    o << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\""
      << num(left + pw + 32) << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color
      << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << num(left + pw + 38) << "\" y=\"" << num(ly + 4) << "\">"
      << escape(s.label) << "</text>\n";
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace bridge
