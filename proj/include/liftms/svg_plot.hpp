#pragma once

#include <string>
#include <utility>
#include <vector>

namespace liftms {

// Deterministic, dependency-free SVG rendering: output depends only on the
// inputs (no timestamps, no ids), so figures are byte-stable.

struct BarGroup {
  std::string label;           // x-axis group label, e.g. "n=8"
  std::vector<double> values;  // one per series
};

struct BarChartSpec {
  std::string title;
  std::vector<std::string> series;  // legend entries
  std::vector<BarGroup> groups;
  double y_max = 1.0;
  std::string y_label = "success rate";
};

std::string render_bar_chart(const BarChartSpec& spec);

struct LineSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

struct LineChartSpec {
  std::string title;
  std::vector<LineSeries> series;
  bool log_y = false;  // log scale; nonpositive values are dropped
  std::string x_label = "iteration";
  std::string y_label;
};

std::string render_line_chart(const LineChartSpec& spec);

// Schema-aware adapters for the harness CSVs.
// report.csv -> grouped success-rate bars: groups from the varying instance
// columns, one series per algorithm tag.
std::string plot_report_csv(const std::string& csv_text);
// trajectory_*.csv or a decomposition CSV -> log-scale ratio lines.
std::string plot_ratio_csv(const std::string& csv_text);

}  // namespace liftms
