#include "liftms/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace liftms {

namespace {

constexpr double kW = 640, kH = 400;
constexpr double kLeft = 62, kRight = 18, kTop = 34, kBottom = 48;
constexpr double kPlotW = kW - kLeft - kRight;
constexpr double kPlotH = kH - kTop - kBottom;

const char* kPalette[] = {"#4878d0", "#ee854a", "#6acc64",
                          "#d65f5f", "#956cb4", "#8c613c"};
constexpr int kPaletteSize = 6;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape_text(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

void open_svg(std::ostringstream& out) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
      << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH
      << "\">\n";
  out << "<rect width=\"" << kW << "\" height=\"" << kH
      << "\" fill=\"white\"/>\n";
}

void title_text(std::ostringstream& out, const std::string& title) {
  if (title.empty()) return;
  out << "<text x=\"" << num(kW / 2) << "\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << escape_text(title) << "</text>\n";
}

void axis_labels(std::ostringstream& out, const std::string& x,
                 const std::string& y) {
  if (!x.empty())
    out << "<text x=\"" << num(kLeft + kPlotW / 2) << "\" y=\""
        << num(kH - 10)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << escape_text(x) << "</text>\n";
  if (!y.empty())
    out << "<text x=\"14\" y=\"" << num(kTop + kPlotH / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\" transform=\"rotate(-90 14 "
        << num(kTop + kPlotH / 2) << ")\">" << escape_text(y) << "</text>\n";
}

void legend(std::ostringstream& out, const std::vector<std::string>& labels) {
  const double x = kLeft + 8, y0 = kTop + 6;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = y0 + 16.0 * i;
    out << "<rect x=\"" << num(x) << "\" y=\"" << num(y)
        << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[i % kPaletteSize] << "\"/>\n";
    out << "<text x=\"" << num(x + 14) << "\" y=\"" << num(y + 9)
        << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape_text(labels[i]) << "</text>\n";
  }
}

}  // namespace

std::string render_bar_chart(const BarChartSpec& spec) {
  if (spec.groups.empty() || spec.series.empty())
    throw std::invalid_argument("render_bar_chart: empty input");
  const double ymax = spec.y_max > 0 ? spec.y_max : 1.0;
  std::ostringstream out;
  open_svg(out);
  title_text(out, spec.title);

  for (int i = 0; i <= 4; ++i) {
    const double frac = i / 4.0;
    const double y = kTop + kPlotH * (1.0 - frac);
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\""
        << num(kLeft + kPlotW) << "\" y2=\"" << num(y)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << short_num(frac * ymax) << "</text>\n";
  }

  const std::size_t groups = spec.groups.size();
  const std::size_t series = spec.series.size();
  const double slot = kPlotW / groups;
  const double bar = slot * 0.8 / series;
  for (std::size_t g = 0; g < groups; ++g) {
    const BarGroup& grp = spec.groups[g];
    if (grp.values.size() != series)
      throw std::invalid_argument("render_bar_chart: ragged group");
    for (std::size_t s = 0; s < series; ++s) {
      const double v = std::clamp(grp.values[s], 0.0, ymax);
      const double h = kPlotH * v / ymax;
      const double x = kLeft + slot * g + slot * 0.1 + bar * s;
      out << "<rect x=\"" << num(x) << "\" y=\"" << num(kTop + kPlotH - h)
          << "\" width=\"" << num(bar) << "\" height=\"" << num(h)
          << "\" fill=\"" << kPalette[s % kPaletteSize] << "\"/>\n";
    }
    out << "<text x=\"" << num(kLeft + slot * (g + 0.5)) << "\" y=\""
        << num(kTop + kPlotH + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << escape_text(grp.label) << "</text>\n";
  }

  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + kPlotH)
      << "\" x2=\"" << num(kLeft + kPlotW) << "\" y2=\"" << num(kTop + kPlotH)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\""
      << num(kLeft) << "\" y2=\"" << num(kTop + kPlotH)
      << "\" stroke=\"black\"/>\n";
  legend(out, spec.series);
  axis_labels(out, "", spec.y_label);
  out << "</svg>\n";
  return out.str();
}

std::string render_line_chart(const LineChartSpec& spec) {
  if (spec.series.empty())
    throw std::invalid_argument("render_line_chart: empty input");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : spec.series)
    for (const auto& [x, y] : s.points) {
      if (spec.log_y && y <= 0) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      const double yy = spec.log_y ? std::log10(y) : y;
      ymin = std::min(ymin, yy);
      ymax = std::max(ymax, yy);
    }
  if (!(xmin <= xmax) || !(ymin <= ymax))
    throw std::invalid_argument("render_line_chart: no drawable points");
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  if (spec.log_y) {
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
    if (ymax == ymin) ymax = ymin + 1;
  }

  auto px = [&](double x) {
    return kLeft + kPlotW * (x - xmin) / (xmax - xmin);
  };
  auto py = [&](double yy) {
    return kTop + kPlotH * (1.0 - (yy - ymin) / (ymax - ymin));
  };

  std::ostringstream out;
  open_svg(out);
  title_text(out, spec.title);

  const int yticks = spec.log_y ? static_cast<int>(ymax - ymin) : 4;
  for (int i = 0; i <= yticks; ++i) {
    const double yy = ymin + (ymax - ymin) * i / yticks;
    const double y = py(yy);
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\""
        << num(kLeft + kPlotW) << "\" y2=\"" << num(y)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << (spec.log_y ? "1e" + short_num(yy) : short_num(yy)) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double x = xmin + (xmax - xmin) * i / 4.0;
    out << "<text x=\"" << num(px(x)) << "\" y=\"" << num(kTop + kPlotH + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << short_num(x) << "</text>\n";
  }

  std::vector<std::string> labels;
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    std::ostringstream pts;
    bool any = false;
    for (const auto& [x, y] : spec.series[s].points) {
      if (spec.log_y && y <= 0) continue;
      const double yy = spec.log_y ? std::log10(y) : y;
      pts << num(px(x)) << ',' << num(py(yy)) << ' ';
      any = true;
    }
    if (any)
      out << "<polyline fill=\"none\" stroke=\""
          << kPalette[s % kPaletteSize] << "\" stroke-width=\"1.5\" points=\""
          << pts.str() << "\"/>\n";
    labels.push_back(spec.series[s].label);
  }

  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + kPlotH)
      << "\" x2=\"" << num(kLeft + kPlotW) << "\" y2=\"" << num(kTop + kPlotH)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\""
      << num(kLeft) << "\" y2=\"" << num(kTop + kPlotH)
      << "\" stroke=\"black\"/>\n";
  if (labels.size() > 1 && labels.size() <= 12) legend(out, labels);
  axis_labels(out, spec.x_label, spec.y_label);
  out << "</svg>\n";
  return out.str();
}

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

int column_of(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

std::string plot_report_csv(const std::string& csv_text) {
  const auto rows = parse_csv(csv_text);
  if (rows.size() < 2)
    throw std::invalid_argument("plot_report_csv: empty report");
  const auto& header = rows[0];
  const int c_alg = column_of(header, "algorithm");
  const int c_success = column_of(header, "success");
  if (c_alg < 0 || c_success < 0)
    throw std::invalid_argument("plot_report_csv: not a report csv");

  // group by whichever instance columns actually vary
  const std::vector<std::string> candidates = {"experiment", "n", "r",
                                               "m",          "l", "epsilon"};
  std::vector<int> varying;
  for (const auto& name : candidates) {
    const int c = column_of(header, name);
    if (c < 0) continue;
    std::set<std::string> values;
    for (std::size_t i = 1; i < rows.size(); ++i) values.insert(rows[i][c]);
    if (values.size() > 1) varying.push_back(c);
  }

  std::map<std::string, std::map<std::string, std::pair<int, int>>> table;
  std::set<std::string> tags;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::string group;
    for (int c : varying) {
      if (!group.empty()) group += ' ';
      group += header[c] + "=" + r[c];
    }
    if (group.empty()) group = "all";
    auto& cell = table[group][r[c_alg]];
    cell.first += r[c_success] == "1" ? 1 : 0;
    cell.second += 1;
    tags.insert(r[c_alg]);
  }

  BarChartSpec spec;
  spec.title = "success rate";
  spec.series.assign(tags.begin(), tags.end());
  for (const auto& [group, cells] : table) {
    BarGroup g;
    g.label = group;
    for (const auto& tag : spec.series) {
      const auto it = cells.find(tag);
      g.values.push_back(
          it == cells.end() || it->second.second == 0
              ? 0.0
              : static_cast<double>(it->second.first) / it->second.second);
    }
    spec.groups.push_back(std::move(g));
  }
  return render_bar_chart(spec);
}

std::string plot_ratio_csv(const std::string& csv_text) {
  const auto rows = parse_csv(csv_text);
  if (rows.size() < 2)
    throw std::invalid_argument("plot_ratio_csv: empty input");
  const auto& header = rows[0];
  const int c_iter = column_of(header, "iter");
  if (c_iter < 0) throw std::invalid_argument("plot_ratio_csv: no iter column");

  LineChartSpec spec;
  spec.log_y = true;
  spec.y_label = "ratio";
  spec.title = "deflation ratio";

  const int c_defl = column_of(header, "deflation");
  if (c_defl >= 0) {  // decomposition schema: measured + predicted series
    const int c_pred = column_of(header, "predicted");
    LineSeries measured{"measured", {}}, predicted{"predicted", {}};
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double it = std::stod(rows[i][c_iter]);
      measured.points.emplace_back(it, std::stod(rows[i][c_defl]));
      if (c_pred >= 0)
        predicted.points.emplace_back(it, std::stod(rows[i][c_pred]));
    }
    spec.series.push_back(std::move(measured));
    if (c_pred >= 0) spec.series.push_back(std::move(predicted));
    return render_line_chart(spec);
  }

  const int c_ratio = column_of(header, "ratio");
  const int c_trial = column_of(header, "trial");
  if (c_ratio < 0)
    throw std::invalid_argument("plot_ratio_csv: no ratio column");
  std::map<std::string, LineSeries> by_trial;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double ratio = std::stod(rows[i][c_ratio]);
    if (ratio <= 0) continue;  // not tracked at this row
    const std::string key =
        c_trial >= 0 ? "trial " + rows[i][c_trial] : "trace";
    auto& series = by_trial[key];
    series.label = key;
    series.points.emplace_back(std::stod(rows[i][c_iter]), ratio);
  }
  for (auto& [key, series] : by_trial)
    spec.series.push_back(std::move(series));
  if (spec.series.empty())
    throw std::invalid_argument("plot_ratio_csv: no tracked ratio values");
  return render_line_chart(spec);
}

}  // namespace liftms
