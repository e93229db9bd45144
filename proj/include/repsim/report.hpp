#pragma once

// SVG renderings of analysis outputs. Every renderer is a pure function of
// its inputs, so identical inputs give byte-identical documents. Figures are
// written together with csv and JSON sidecars carrying the plotted numbers.

#include <nlohmann/json.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "repsim/ensemble.hpp"
#include "repsim/error.hpp"
#include "repsim/rca.hpp"
#include "repsim/representation.hpp"
#include "repsim/rsa.hpp"
#include "repsim/text.hpp"

namespace repsim {

enum class PlotKind { rsa_heatmap, mds_scatter, rca_heatmap, diff_table };

enum class MissingPolicy { error, hatch };

struct RenderSpec {
  PlotKind kind = PlotKind::rsa_heatmap;
  std::string title;
  double lo = 0.0;
  double hi = 1.0;
  MissingPolicy missing = MissingPolicy::hatch;
  std::optional<std::string> order_reference;  // rca-heatmap: column ordering reference row
  bool order_rows_by_performance = true;        // rca-heatmap: sort rows within each data type

  static RenderSpec rsa_default() { return {PlotKind::rsa_heatmap, "Representational similarity (Spearman)", 0.0, 1.0}; }
  static RenderSpec rca_default() { return {PlotKind::rca_heatmap, "Probe performance by norm category", -0.1, 0.6}; }

  void validate() const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo))
      throw Error(Errc::invalid_argument, "color scale bounds must be finite with hi > lo");
  }
};

namespace svg {

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string num(double v) { return text::format_fixed(v, 1); }

/// Sequential palette (dark blue -> teal -> yellow), value clipped to [lo, hi].
inline std::string color(double v, double lo, double hi) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  double t = (std::clamp(v, lo, hi) - lo) / (hi - lo);
  t *= static_cast<double>(stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

inline std::string text_color(double v, double lo, double hi) {
  return (std::clamp(v, lo, hi) - lo) / (hi - lo) > 0.6 ? "#000000" : "#ffffff";
}

inline std::string header(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
         "patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#888888\" "
         "stroke-width=\"2\"/></pattern></defs>\n"
         "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"#ffffff\"/>\n";
}

inline std::string title(const std::string& t, double x) {
  if (t.empty()) return {};
  return "<text class=\"title\" x=\"" + num(x) + "\" y=\"18.0\" font-size=\"14\">" + escape(t) + "</text>\n";
}

inline std::string value_cell(double x, double y, double w, double h, std::optional<double> v, const RenderSpec& spec) {
  std::string s;
  if (!v) {
    s += "<rect class=\"cell missing\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
         num(h) + "\" fill=\"url(#hatch)\" stroke=\"#cccccc\"/>\n";
    return s;
  }
  s += "<rect class=\"cell\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
       "\" fill=\"" + color(*v, spec.lo, spec.hi) + "\"/>\n";
  s += "<text class=\"value\" x=\"" + num(x + w / 2) + "\" y=\"" + num(y + h / 2 + 4) +
       "\" text-anchor=\"middle\" fill=\"" + text_color(*v, spec.lo, spec.hi) + "\">" + text::format_fixed(*v, 2) +
       "</text>\n";
  return s;
}

inline std::string legend(double x, double y, const RenderSpec& spec) {
  std::string s;
  constexpr int steps = 10;
  for (int i = 0; i < steps; ++i) {
    const double v = spec.lo + (spec.hi - spec.lo) * (i + 0.5) / steps;
    s += "<rect class=\"legend\" x=\"" + num(x + 12.0 * i) + "\" y=\"" + num(y) + "\" width=\"12.0\" height=\"10.0\" fill=\"" +
         color(v, spec.lo, spec.hi) + "\"/>\n";
  }
  s += "<text class=\"legend-label\" x=\"" + num(x) + "\" y=\"" + num(y + 22) + "\">" + text::format_fixed(spec.lo, 2) + "</text>\n";
  s += "<text class=\"legend-label\" x=\"" + num(x + 12.0 * steps) + "\" y=\"" + num(y + 22) + "\" text-anchor=\"end\">" +
       text::format_fixed(spec.hi, 2) + "</text>\n";
  return s;
}

inline double label_width(const std::vector<std::string>& labels) {
  std::size_t m = 0;
  for (const auto& l : labels) m = std::max(m, l.size());
  return 12.0 + 6.5 * static_cast<double>(m);
}

}  // namespace svg

/// n x n heatmap in input order, with separators where the data type changes.
inline std::string render_rsa(const RsaMatrix& rsa, const RenderSpec& spec) {
  spec.validate();
  if (spec.missing == MissingPolicy::error && rsa.any_missing())
    throw Error(Errc::missing_cells, "RSA matrix has missing cells");
  const std::size_t n = rsa.size();
  const double cell = 36, left = svg::label_width(rsa.names), top = 40 + svg::label_width(rsa.names);
  const double w = left + cell * static_cast<double>(n) + 20, h = top + cell * static_cast<double>(n) + 50;
  std::string s = svg::header(w, h) + svg::title(spec.title, 10);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = top + cell * static_cast<double>(i);
    s += "<text class=\"row-label\" x=\"" + svg::num(left - 6) + "\" y=\"" + svg::num(y + cell / 2 + 4) +
         "\" text-anchor=\"end\">" + svg::escape(rsa.names[i]) + "</text>\n";
    const double x = left + cell * static_cast<double>(i) + cell / 2 + 4;
    s += "<text class=\"col-label\" x=\"" + svg::num(x) + "\" y=\"" + svg::num(top - 6) + "\" transform=\"rotate(-90 " +
         svg::num(x) + " " + svg::num(top - 6) + ")\">" + svg::escape(rsa.names[i]) + "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
      std::optional<double> v;
      if (!rsa.missing(I, J)) v = rsa.rho(I, J);
      s += svg::value_cell(left + cell * static_cast<double>(j), top + cell * static_cast<double>(i), cell, cell, v, spec);
    }
  for (std::size_t i = 1; i < n; ++i) {
    if (rsa.labels[i] == rsa.labels[i - 1]) continue;
    const double p = cell * static_cast<double>(i);
    s += "<line class=\"group-sep\" x1=\"" + svg::num(left) + "\" y1=\"" + svg::num(top + p) + "\" x2=\"" +
         svg::num(left + cell * static_cast<double>(n)) + "\" y2=\"" + svg::num(top + p) +
         "\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
    s += "<line class=\"group-sep\" x1=\"" + svg::num(left + p) + "\" y1=\"" + svg::num(top) + "\" x2=\"" +
         svg::num(left + p) + "\" y2=\"" + svg::num(top + cell * static_cast<double>(n)) +
         "\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
  }
  s += svg::legend(left, top + cell * static_cast<double>(n) + 14, spec);
  return s + "</svg>\n";
}

/// 2-D scatter of MDS coordinates, one color per data type.
inline std::string render_mds(const std::vector<std::string>& names, const std::vector<DataType>& labels,
                              const Eigen::MatrixXd& coords, const RenderSpec& spec) {
  if (coords.rows() != static_cast<Eigen::Index>(names.size()) || coords.cols() < 1)
    throw Error(Errc::dimension_mismatch, "MDS coordinates vs names");
  const double size = 420, pad = 60;
  const auto x_of = [&](Eigen::Index i) { return coords(i, 0); };
  const auto y_of = [&](Eigen::Index i) { return coords.cols() > 1 ? coords(i, 1) : 0.0; };
  double lim = 1e-9;
  for (Eigen::Index i = 0; i < coords.rows(); ++i) lim = std::max({lim, std::abs(x_of(i)), std::abs(y_of(i))});
  const auto px = [&](double v) { return pad + (v / lim + 1) * 0.5 * (size - 2 * pad); };
  const auto py = [&](double v) { return size - (pad + (v / lim + 1) * 0.5 * (size - 2 * pad)); };
  static const std::map<DataType, std::string> palette{
      {DataType::text, "#1b9e77"}, {DataType::behavior, "#7570b3"}, {DataType::brain, "#1f78b4"}};
  std::string s = svg::header(size, size) + svg::title(spec.title, 10);
  s += "<line class=\"axis\" x1=\"" + svg::num(pad) + "\" y1=\"" + svg::num(py(0)) + "\" x2=\"" + svg::num(size - pad) +
       "\" y2=\"" + svg::num(py(0)) + "\" stroke=\"#dddddd\"/>\n";
  s += "<line class=\"axis\" x1=\"" + svg::num(px(0)) + "\" y1=\"" + svg::num(pad) + "\" x2=\"" + svg::num(px(0)) +
       "\" y2=\"" + svg::num(size - pad) + "\" stroke=\"#dddddd\"/>\n";
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const auto& name = names[static_cast<std::size_t>(i)];
    const auto type = labels[static_cast<std::size_t>(i)];
    s += "<circle class=\"point " + std::string(to_string(type)) + "\" cx=\"" + svg::num(px(x_of(i))) + "\" cy=\"" +
         svg::num(py(y_of(i))) + "\" r=\"5.0\" fill=\"" + palette.at(type) + "\"/>\n";
    s += "<text class=\"point-label\" x=\"" + svg::num(px(x_of(i)) + 7) + "\" y=\"" + svg::num(py(y_of(i)) + 4) + "\">" +
         svg::escape(name) + "</text>\n";
  }
  double ly = size - 20;
  double lx = pad;
  for (const auto& [t, c] : palette) {
    s += "<circle class=\"legend\" cx=\"" + svg::num(lx) + "\" cy=\"" + svg::num(ly) + "\" r=\"5.0\" fill=\"" + c + "\"/>\n";
    s += "<text class=\"legend-label\" x=\"" + svg::num(lx + 8) + "\" y=\"" + svg::num(ly + 4) + "\">" +
         std::string(to_string(t)) + "</text>\n";
    lx += 90;
  }
  return s + "</svg>\n";
}

struct RcaLayout {
  std::vector<std::size_t> row_order;  // indices into table.rows
  std::vector<std::size_t> col_order;  // indices into table.categories
};

/// Rows grouped text, behavior, brain and sorted within each group by mean
/// available cell (descending, stable). Columns follow the reference row's
/// cells (descending, stable, missing last); input order without a reference.
inline RcaLayout rca_layout(const CategoryTable& table, const std::map<std::string, DataType>& type_of,
                            const RenderSpec& spec) {
  RcaLayout lay;
  const auto value = [&](std::size_t r, std::size_t c) {
    return table.cells(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  };
  std::vector<double> overall(table.rows.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    double sum = 0;
    std::size_t cnt = 0;
    for (std::size_t c = 0; c < table.categories.size(); ++c)
      if (!std::isnan(value(r, c))) {
        sum += value(r, c);
        ++cnt;
      }
    if (cnt) overall[r] = sum / static_cast<double>(cnt);
  }
  for (DataType t : {DataType::text, DataType::behavior, DataType::brain}) {
    std::vector<std::size_t> group;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto it = type_of.find(table.rows[r]);
      if (it == type_of.end()) throw Error(Errc::invalid_argument, "no data type for " + table.rows[r]);
      if (it->second == t) group.push_back(r);
    }
    if (spec.order_rows_by_performance)
      std::stable_sort(group.begin(), group.end(), [&](std::size_t a, std::size_t b) { return overall[a] > overall[b]; });
    lay.row_order.insert(lay.row_order.end(), group.begin(), group.end());
  }
  lay.col_order.resize(table.categories.size());
  std::iota(lay.col_order.begin(), lay.col_order.end(), std::size_t{0});
  if (spec.order_reference) {
    const auto it = std::find(table.rows.begin(), table.rows.end(), *spec.order_reference);
    if (it == table.rows.end()) throw Error(Errc::invalid_argument, "unknown ordering reference " + *spec.order_reference);
    const auto ref = static_cast<std::size_t>(it - table.rows.begin());
    std::stable_sort(lay.col_order.begin(), lay.col_order.end(), [&](std::size_t a, std::size_t b) {
      const double va = value(ref, a), vb = value(ref, b);
      if (std::isnan(va) || std::isnan(vb)) return !std::isnan(va) && std::isnan(vb);
      return va > vb;
    });
  }
  return lay;
}

inline std::string render_rca(const CategoryTable& table, const std::map<std::string, DataType>& type_of,
                              const RenderSpec& spec) {
  spec.validate();
  const auto lay = rca_layout(table, type_of, spec);
  const double cw = 44, ch = 24, left = svg::label_width(table.rows), top = 40 + svg::label_width(table.categories);
  const double w = left + cw * static_cast<double>(table.categories.size()) + 20;
  const double h = top + ch * static_cast<double>(table.rows.size()) + 50;
  std::string s = svg::header(w, h) + svg::title(spec.title, 10);
  for (std::size_t c = 0; c < lay.col_order.size(); ++c) {
    const double x = left + cw * static_cast<double>(c) + cw / 2 + 4;
    s += "<text class=\"col-label\" x=\"" + svg::num(x) + "\" y=\"" + svg::num(top - 6) + "\" transform=\"rotate(-90 " +
         svg::num(x) + " " + svg::num(top - 6) + ")\">" + svg::escape(table.categories[lay.col_order[c]]) + "</text>\n";
  }
  for (std::size_t r = 0; r < lay.row_order.size(); ++r) {
    const std::size_t src = lay.row_order[r];
    const double y = top + ch * static_cast<double>(r);
    s += "<text class=\"row-label\" x=\"" + svg::num(left - 6) + "\" y=\"" + svg::num(y + ch / 2 + 4) +
         "\" text-anchor=\"end\">" + svg::escape(table.rows[src]) + "</text>\n";
    for (std::size_t c = 0; c < lay.col_order.size(); ++c) {
      const double v = table.cells(static_cast<Eigen::Index>(src), static_cast<Eigen::Index>(lay.col_order[c]));
      std::optional<double> cellv;
      if (!std::isnan(v)) cellv = v;
      s += svg::value_cell(left + cw * static_cast<double>(c), y, cw, ch, cellv, spec);
    }
    if (r > 0 && type_of.at(table.rows[src]) != type_of.at(table.rows[lay.row_order[r - 1]]))
      s += "<line class=\"group-sep\" x1=\"" + svg::num(left) + "\" y1=\"" + svg::num(y) + "\" x2=\"" +
           svg::num(left + cw * static_cast<double>(lay.col_order.size())) + "\" y2=\"" + svg::num(y) +
           "\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
  }
  s += svg::legend(left, top + ch * static_cast<double>(table.rows.size()) + 14, spec);
  return s + "</svg>\n";
}

/// Category table of median differences; significant rows (p < .05) in bold.
inline std::string render_diff_table(const DiffReport& report, const RenderSpec& spec) {
  const double row_h = 20, top = 50;
  std::vector<std::string> names;
  for (const auto& c : report.categories) names.push_back(c.category);
  const double c0 = 10, c1 = c0 + svg::label_width(names) + 10, c2 = c1 + 70, c3 = c2 + 90;
  const double w = c3 + 90, h = top + row_h * static_cast<double>(report.categories.size() + 1) + 20;
  std::string title = spec.title.empty() ? report.label_a + " - " + report.label_b : spec.title;
  std::string s = svg::header(w, h) + svg::title(title, 10);
  const auto cell = [&](double x, double y, const std::string& t, bool bold, const char* cls) {
    return "<text class=\"" + std::string(cls) + "\" x=\"" + svg::num(x) + "\" y=\"" + svg::num(y) + "\"" +
           (bold ? " font-weight=\"bold\"" : "") + ">" + svg::escape(t) + "</text>\n";
  };
  s += cell(c0, top, "category", true, "header");
  s += cell(c1, top, "n", true, "header");
  s += cell(c2, top, "median diff", true, "header");
  s += cell(c3, top, "p", true, "header");
  for (std::size_t i = 0; i < report.categories.size(); ++i) {
    const auto& c = report.categories[i];
    const double y = top + row_h * static_cast<double>(i + 1);
    const bool sig = c.test && c.test->p_value < 0.05;
    s += cell(c0, y, c.category, sig, sig ? "row significant" : "row");
    s += cell(c1, y, std::to_string(c.n_norms), sig, "value");
    s += cell(c2, y, c.n_norms ? text::format_fixed(c.median_diff, 2) : "", sig, "value");
    s += cell(c3, y, c.test ? text::format_fixed(c.test->p_value, 3) : "", sig, "value");
  }
  return s + "</svg>\n";
}

/// Writes `<stem>.svg`, `<stem>.csv` and `<stem>.json` side by side.
inline void write_figure(const std::filesystem::path& svg_path, const std::string& svg, const std::string& csv,
                         const nlohmann::ordered_json& json) {
  {
    auto out = text::open_output(svg_path);
    out << svg;
  }
  auto base = svg_path;
  {
    auto out = text::open_output(base.replace_extension(".csv"));
    out << csv;
  }
  auto out = text::open_output(base.replace_extension(".json"));
  out << json.dump(2) << '\n';
}

}  // namespace repsim
