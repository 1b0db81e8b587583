#pragma once

#include <string>
#include <vector>

namespace emokd {

// Minimal deterministic SVG charts for the report files. Coordinates are
// formatted with fixed precision, so identical inputs give identical bytes.

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

std::string line_chart_svg(const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<PlotSeries>& series);

std::string bar_chart_svg(const std::string& title,
                          const std::string& y_label,
                          const std::vector<std::string>& labels,
                          const std::vector<double>& values);

}  // namespace emokd
