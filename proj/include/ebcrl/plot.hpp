#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ebcrl/io.hpp"

namespace ebcrl {

/// Per-category box: quartile box, median bar and the individual values.
struct BoxSeries {
  std::string label;
  std::vector<double> values;
};

/// Static SVG renderers. Output depends only on the inputs (no timestamps,
/// fixed number formatting), so identical data gives identical bytes.
std::string svg_box_chart(const std::string& title, const std::string& y_label,
                          const std::vector<BoxSeries>& series);

/// Grouped bars of medians with IQR whiskers: groups on the x axis, one bar
/// per series inside each group.
struct BarCell {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};
std::string svg_grouped_bars(const std::string& title, const std::string& y_label,
                             const std::vector<std::string>& groups, const std::vector<std::string>& series,
                             const std::map<std::pair<std::string, std::string>, BarCell>& cells);

/// One polyline of medians per series against numeric x values.
struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> median;
  std::vector<double> q1;
  std::vector<double> q3;
};
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<LineSeries>& series);

/// Writes {family}_{metric}.svg files for the figure families "methods",
/// "environments" and, when rows carry sweep columns, "sweep". Returns the
/// paths written. ConfigError on empty input.
std::vector<std::string> write_plots(const std::vector<MetricRow>& rows, const std::filesystem::path& out_dir);

}  // namespace ebcrl
