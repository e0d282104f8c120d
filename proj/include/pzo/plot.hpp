#pragma once

// Static SVG line charts from aggregate.csv: one curve per solver (median over
// seeds) with a shaded band between the quartiles, log-scale y axis.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pzo/csv.hpp"
#include "pzo/diagnostics.hpp"
#include "pzo/errors.hpp"

namespace pzo::plot {

struct Series {
  std::string solver;
  std::vector<double> r, median, q1, q3;
};

struct ChartSpec {
  std::string metric;  // column prefix in aggregate.csv
  std::string title;
  std::string file;
};

struct PlotResult {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

inline const std::vector<ChartSpec>& default_charts() {
  static const std::vector<ChartSpec> c = {
      {"psi", "Optimality residual", "optimality_residual.svg"},
      {"constraint_violation", "Constraint violation ||Ax - b||^2", "constraint_violation.svg"},
  };
  return c;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    if (ch == '<') o += "&lt;";
    else if (ch == '>') o += "&gt;";
    else if (ch == '&') o += "&amp;";
    else o += ch;
  }
  return o;
}

inline double parse(const std::string& cell) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    return std::stod(cell);
  } catch (const std::exception&) {
    throw FormatError("aggregate.csv: cannot parse '" + cell + "' as a number");
  }
}

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
  return palette[i % 7];
}

}  // namespace detail

inline std::vector<Series> load_series(const csv::Table& t, const std::string& metric, const std::string& file) {
  const auto c_solver = t.require_column("solver", file);
  const auto c_r = t.require_column("r", file);
  const auto c_med = t.require_column(metric + "_median", file);
  const auto c_q1 = t.require_column(metric + "_q1", file);
  const auto c_q3 = t.require_column(metric + "_q3", file);
  std::vector<Series> out;
  for (const auto& row : t.rows) {
    if (out.empty() || out.back().solver != row[c_solver]) out.push_back({row[c_solver], {}, {}, {}, {}});
    const double med = detail::parse(row[c_med]);
    if (std::isnan(med)) continue;
    Series& s = out.back();
    s.r.push_back(detail::parse(row[c_r]));
    s.median.push_back(med);
    s.q1.push_back(detail::parse(row[c_q1]));
    s.q3.push_back(detail::parse(row[c_q3]));
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const Series& s) { return s.r.empty(); }), out.end());
  return out;
}

// Log-y chart. Non-positive values are clipped to the smallest positive value shown.
inline std::string render_svg(const std::vector<Series>& series, const std::string& title) {
  const double W = 720, H = 440, ml = 80, mr = 150, mt = 40, mb = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.r.size(); ++i) {
      xmin = std::min(xmin, s.r[i]);
      xmax = std::max(xmax, s.r[i]);
      for (double v : {s.median[i], s.q1[i], s.q3[i]})
        if (v > 0.0 && std::isfinite(v)) {
          ymin = std::min(ymin, v);
          ymax = std::max(ymax, v);
        }
    }
  if (!std::isfinite(ymin)) ymin = 1e-16, ymax = 1.0;
  if (xmax <= xmin) xmax = xmin + 1.0;
  double lo = std::floor(std::log10(ymin)), hi = std::ceil(std::log10(ymax));
  if (hi <= lo) hi = lo + 1.0;
  const double floor_v = std::pow(10.0, lo);

  auto X = [&](double r) { return ml + (r - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto Y = [&](double v) {
    const double lv = std::log10(std::max(v, floor_v));
    return mt + (hi - lv) / (hi - lo) * (H - mt - mb);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::escape(title)
     << "</text>\n";
  // axes and decade grid
  os << "<g stroke=\"#ccc\" stroke-width=\"0.5\">\n";
  const int step = std::max(1, static_cast<int>(std::ceil((hi - lo) / 10.0)));
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += step) {
    const double y = Y(std::pow(10.0, e));
    os << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << W - mr << "\" y2=\"" << y << "\"/>\n";
  }
  os << "</g>\n";
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += step) {
    os << "<text x=\"" << ml - 6 << "\" y=\"" << Y(std::pow(10.0, e)) + 4 << "\" text-anchor=\"end\">1e" << e
       << "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const double r = xmin + (xmax - xmin) * k / 5.0;
    os << "<text x=\"" << X(r) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\">"
       << detail::fmt(std::round(r)) << "</text>\n";
  }
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">iteration r</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* col = detail::color(k);
    os << "<polygon fill=\"" << col << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.r.size(); ++i) os << X(s.r[i]) << ',' << Y(s.q3[i]) << ' ';
    for (std::size_t i = s.r.size(); i-- > 0;) os << X(s.r[i]) << ',' << Y(s.q1[i]) << ' ';
    os << "\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.r.size(); ++i) os << X(s.r[i]) << ',' << Y(s.median[i]) << ' ';
    os << "\"/>\n";
    const double ly = mt + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - mr + 36 << "\" y=\"" << ly + 4 << "\">" << detail::escape(s.solver) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// Reads <dir>/aggregate.csv and writes one SVG per chart into <dir>.
// A third chart of the prox-gradient residual is added when that column has data.
inline PlotResult plot_results(const std::filesystem::path& dir) {
  const auto file = (dir / "aggregate.csv").string();
  const csv::Table t = csv::read(file);
  PlotResult res;
  std::vector<ChartSpec> charts = default_charts();
  if (t.column("residual_median") >= 0)
    charts.push_back({"residual", "Prox-gradient residual ||x - prox(x - grad f(x))||^2", "prox_gradient_residual.svg"});

  std::vector<std::pair<ChartSpec, std::vector<Series>>> loaded;
  for (const auto& c : charts) loaded.emplace_back(c, load_series(t, c.metric, file));
  if (t.rows.empty()) {
    res.warnings.push_back(file + ": no solver data, nothing plotted");
    return res;
  }
  for (const auto& [c, series] : loaded) {
    if (series.empty()) {
      res.warnings.push_back(c.metric + ": no values, chart skipped");
      continue;
    }
    const auto out = dir / c.file;
    std::ofstream os(out);
    if (!os) throw FormatError("cannot write " + out.string());
    os << render_svg(series, c.title);
    res.files.push_back(out);
  }
  return res;
}

}  // namespace pzo::plot
