#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "imgbias/error.hpp"
#include "imgbias/eval.hpp"

namespace imgbias {

/// Two decimals after half-up rounding; "-0.00" prints as "0.00".
inline std::string fmt2(double v, bool plus = false) {
  double r = round2(v);
  if (r == 0) r = 0;  // drop negative zero
  return plus ? fmt::format("{:+.2f}", r) : fmt::format("{:.2f}", r);
}

// ---- CSV ---------------------------------------------------------------------

/// Header "train\eval,<cols...>", one line per row; undefined cells are empty.
inline void write_matrix_csv(std::ostream& out, const EvalMatrix& m) {
  out << "train\\eval";
  for (const auto& c : m.col_names) out << ',' << csv_field(c);
  out << '\n';
  for (std::size_t i = 0; i < m.row_names.size(); ++i) {
    out << csv_field(m.row_names[i]);
    for (const auto& v : m.values[i]) out << ',' << (v ? fmt2(*v) : "");
    out << '\n';
  }
}

inline EvalMatrix read_matrix_csv(std::istream& in, Metric metric, std::string condition) {
  EvalMatrix m;
  m.metric = metric;
  m.condition = std::move(condition);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("matrix CSV is empty");
  auto header = split_csv_line(line);
  if (header.size() < 2) throw ParseError("matrix CSV needs at least one column");
  m.col_names.assign(header.begin() + 1, header.end());
  for (long n = 2; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw ParseError("matrix CSV line " + std::to_string(n) + ": wrong field count");
    m.row_names.push_back(f[0]);
    auto& row = m.values.emplace_back();
    for (std::size_t k = 1; k < f.size(); ++k) {
      if (f[k].empty()) {
        row.emplace_back();
        continue;
      }
      const auto v = parse_double(f[k]);
      if (!v) throw ParseError("matrix CSV line " + std::to_string(n) + ": bad value '" + f[k] + "'");
      row.push_back(*v);
    }
  }
  if (m.row_names.empty()) throw ParseError("matrix CSV has no rows");
  return m;
}

/// "train_subset,mean" per row, then "total" with the grand average.
inline void write_averages_csv(std::ostream& out, const EvalMatrix& m) {
  const auto rows = row_average(m);
  out << "train_subset,mean\n";
  for (const auto& [name, v] : rows) out << csv_field(name) << ',' << (v ? fmt2(*v) : "") << '\n';
  const auto total = grand_average(rows);
  out << "total," << (total ? fmt2(*total) : "") << '\n';
}

inline void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "condition,accuracy\n";
  for (const auto& p : curve) out << csv_field(p.condition) << ',' << (p.value ? fmt2(*p.value) : "") << '\n';
}

/// Long form: width_lo,height_lo,n,accuracy,flag over every cell.
inline void write_size_grid_csv(std::ostream& out, const SizeAccuracyGrid& g) {
  auto lo = [&](int i) { return i == g.bins - 1 ? g.max_edge : i * g.bin_width; };
  out << "width_lo,height_lo,n,accuracy,flag\n";
  for (int i = 0; i < g.bins; ++i)
    for (int j = 0; j < g.bins; ++j) {
      const bool marker = g.marker && g.marker->first == i && g.marker->second == j;
      std::string flag = g.no_data(i, j) ? "NO_DATA" : "";
      if (marker) flag = flag.empty() ? "MARKER" : "MARKER;NO_DATA";
      const auto v = g.at(i, j);
      out << lo(i) << ',' << lo(j) << ',' << g.count(i, j) << ',' << (v ? fmt2(*v) : "") << ',' << flag << '\n';
    }
}

// ---- SVG ---------------------------------------------------------------------

namespace svg {

inline std::string escape(const std::string& s) {
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

/// White to blue over [0,100]; DIFF is red (negative) / white / blue over [-50,50].
inline std::string fill(double v, bool diverging) {
  auto mix = [](int a, int b, double t) { return static_cast<int>(std::lround(a + (b - a) * t)); };
  if (!diverging) {
    const double t = std::clamp(v / 100.0, 0.0, 1.0);
    return fmt::format("#{:02x}{:02x}{:02x}", mix(255, 33, t), mix(255, 102, t), mix(255, 172, t));
  }
  const double t = std::clamp(std::abs(v) / 50.0, 0.0, 1.0);
  if (v < 0) return fmt::format("#{:02x}{:02x}{:02x}", mix(255, 178, t), mix(255, 24, t), mix(255, 43, t));
  return fmt::format("#{:02x}{:02x}{:02x}", mix(255, 33, t), mix(255, 102, t), mix(255, 172, t));
}

/// Dark text on light cells, white on dark ones.
inline const char* ink(double v, bool diverging) {
  const double t = diverging ? std::abs(v) / 50.0 : v / 100.0;
  return t > 0.6 ? "#ffffff" : "#000000";
}

struct Cell {
  std::optional<double> value;
  bool marker = false;
};

/// Heatmap with row labels on the left and column labels on top. Empty
/// cells get a black cross (class "cross-nodata"), marked cells a red one
/// (class "cross-marker"). Coordinates are integers so output bytes are stable.
inline std::string heatmap(const std::string& title, const std::vector<std::string>& rows,
                           const std::vector<std::string>& cols, const std::vector<std::vector<Cell>>& cells,
                           bool diverging, bool signed_text, int cw = 64, int ch = 28, int font = 11) {
  const int left = 120, top = 70;
  const int width = left + cw * static_cast<int>(cols.size()) + 10;
  const int height = top + ch * static_cast<int>(rows.size()) + 10;
  std::string s;
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"{}\">\n",
      width, height, width, height, font);
  s += "<style>.cross-nodata{stroke:#000000;stroke-width:2}.cross-marker{stroke:#d00000;stroke-width:3}</style>\n";
  s += fmt::format("<text x=\"{}\" y=\"20\" font-size=\"14\">{}</text>\n", left, escape(title));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const int x = left + cw * static_cast<int>(j) + cw / 2;
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x, top - 8, escape(cols[j]));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int y = top + ch * static_cast<int>(i);
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", left - 6, y + ch / 2 + font / 3,
                     escape(rows[i]));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const int x = left + cw * static_cast<int>(j);
      const Cell& c = cells[i][j];
      auto cross = [&](const char* cls) {
        s += fmt::format("<path class=\"{}\" d=\"M{} {}L{} {}M{} {}L{} {}\"/>\n", cls, x + 4, y + 4, x + cw - 4,
                         y + ch - 4, x + cw - 4, y + 4, x + 4, y + ch - 4);
      };
      if (c.value) {
        s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\"/>\n", x,
                         y, cw, ch, fill(*c.value, diverging));
        s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{}</text>\n", x + cw / 2,
                         y + ch / 2 + font / 3, ink(*c.value, diverging), fmt2(*c.value, signed_text));
      } else {
        s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#eeeeee\" stroke=\"#ffffff\"/>\n",
                         x, y, cw, ch);
        cross("cross-nodata");
      }
      if (c.marker) cross("cross-marker");
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace svg

inline std::string matrix_svg(const EvalMatrix& m) {
  std::vector<std::vector<svg::Cell>> cells;
  for (const auto& row : m.values) {
    auto& out = cells.emplace_back();
    for (const auto& v : row) out.push_back({v, false});
  }
  const bool diff = m.metric == Metric::Diff;
  return svg::heatmap(to_string(m.metric) + " " + m.condition + " (rows: train, columns: eval)", m.row_names,
                      m.col_names, cells, diff, diff);
}

/// Rows are height bins from the top, columns width bins, as in a size plot.
inline std::string size_grid_svg(const SizeAccuracyGrid& g, const std::string& title) {
  auto label = [&](int i) {
    return i == g.bins - 1 ? fmt::format(">={}", g.max_edge) : fmt::format("{}", i * g.bin_width);
  };
  std::vector<std::string> rows, cols;
  for (int i = 0; i < g.bins; ++i) cols.push_back(label(i));
  for (int j = 0; j < g.bins; ++j) rows.push_back(label(j));
  std::vector<std::vector<svg::Cell>> cells(g.bins, std::vector<svg::Cell>(g.bins));
  for (int i = 0; i < g.bins; ++i)
    for (int j = 0; j < g.bins; ++j)
      cells[j][i] = {g.at(i, j), g.marker && g.marker->first == i && g.marker->second == j};
  return svg::heatmap(title + " (columns: width, rows: height)", rows, cols, cells, false, false, 40, 22, 9);
}

/// Polyline of accuracy per condition, 0..100 on the y axis.
inline std::string curve_svg(const std::vector<CurvePoint>& curve, const std::string& title) {
  const int left = 50, top = 40, w = 80 * std::max<int>(1, static_cast<int>(curve.size())), h = 200;
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      left + w + 20, top + h + 40, left + w + 20, top + h + 40);
  s += fmt::format("<text x=\"{}\" y=\"20\" font-size=\"14\">{}</text>\n", left, svg::escape(title));
  s += fmt::format("<path d=\"M{} {}L{} {}L{} {}\" fill=\"none\" stroke=\"#000000\"/>\n", left, top, left, top + h,
                   left + w, top + h);
  for (int t = 0; t <= 100; t += 25)
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", left - 4, top + h - h * t / 100 + 4, t);
  std::string pts;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const int x = left + 40 + 80 * static_cast<int>(k);
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x, top + h + 16,
                     svg::escape(curve[k].condition));
    if (!curve[k].value) continue;
    const int y = top + h - static_cast<int>(std::lround(h * std::clamp(*curve[k].value, 0.0, 100.0) / 100.0));
    pts += fmt::format("{}{},{}", pts.empty() ? "" : " ", x, y);
    s += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"3\"/>\n", x, y);
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x, y - 8, fmt2(*curve[k].value));
  }
  if (!pts.empty()) s += "<polyline fill=\"none\" stroke=\"#2166ac\" points=\"" + pts + "\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace imgbias
