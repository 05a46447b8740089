#include "choquard/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "choquard/errors.hpp"

#ifndef CHOQUARD_VERSION
#define CHOQUARD_VERSION "0.0.0"
#endif

namespace choquard {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

std::string fixed(double x, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

std::string tick_label(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
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

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

}  // namespace

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void CsvTable::add(const std::vector<double>& row) {
  std::vector<std::string> cells;
  cells.reserve(row.size());
  for (double v : row) cells.push_back(format_double(v));
  add_cells(std::move(cells));
}

void CsvTable::add_cells(std::vector<std::string> row) {
  if (row.size() != header.size()) throw ConfigError("csv row width does not match the header");
  rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::ostringstream os;
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return os.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
  auto os = open_out(path);
  os << str();
}

std::string render_svg(const LinePlot& plot, int width, int height) {
  const double ml = 70, mr = 150, mt = 36, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto ty = [&](double y) { return plot.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!plot.log_y || y > 0.0); };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  for (const auto& [_, v] : plot.hlines)
    if (usable(0.0, v)) {
      y0 = std::min(y0, ty(v));
      y1 = std::max(y1, ty(v));
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + (1.0 - (ty(y) - y0) / (y1 - y0)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fixed(ml + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(plot.title) << "</text>\n";
  os << "<rect x=\"" << fixed(ml) << "\" y=\"" << fixed(mt) << "\" width=\"" << fixed(pw) << "\" height=\"" << fixed(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    const double X = px(xv), Y = mt + (1.0 - k / 4.0) * ph;
    os << "<line x1=\"" << fixed(X) << "\" y1=\"" << fixed(mt + ph) << "\" x2=\"" << fixed(X) << "\" y2=\""
       << fixed(mt + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed(X) << "\" y=\"" << fixed(mt + ph + 18) << "\" text-anchor=\"middle\">"
       << tick_label(xv) << "</text>\n";
    os << "<line x1=\"" << fixed(ml - 5) << "\" y1=\"" << fixed(Y) << "\" x2=\"" << fixed(ml) << "\" y2=\"" << fixed(Y)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed(ml - 8) << "\" y=\"" << fixed(Y + 4) << "\" text-anchor=\"end\">"
       << tick_label(plot.log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
  }
  os << "<text x=\"" << fixed(ml + pw / 2) << "\" y=\"" << fixed(height - 10.0) << "\" text-anchor=\"middle\">"
     << escape(plot.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << fixed(mt + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << fixed(mt + ph / 2) << ")\">" << escape(plot.y_label) << (plot.log_y ? " (log)" : "") << "</text>\n";

  for (const auto& [name, v] : plot.hlines) {
    if (!usable(0.0, v)) continue;
    os << "<line x1=\"" << fixed(ml) << "\" y1=\"" << fixed(py(v)) << "\" x2=\"" << fixed(ml + pw) << "\" y2=\""
       << fixed(py(v)) << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
    os << "<text x=\"" << fixed(ml + pw - 4) << "\" y=\"" << fixed(py(v) - 4) << "\" text-anchor=\"end\" fill=\"gray\">"
       << escape(name) << "</text>\n";
  }
  std::size_t ci = 0;
  for (const auto& s : plot.series) {
    const char* color = kColors[ci++ % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      os << (first ? "" : " ") << fixed(px(s.x[i])) << "," << fixed(py(s.y[i]));
      first = false;
    }
    os << "\"/>\n";
    const double ly = mt + 14.0 + 18.0 * static_cast<double>(ci - 1);
    os << "<line x1=\"" << fixed(ml + pw + 10) << "\" y1=\"" << fixed(ly - 4) << "\" x2=\"" << fixed(ml + pw + 30)
       << "\" y2=\"" << fixed(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fixed(ml + pw + 35) << "\" y=\"" << fixed(ly) << "\">" << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_svg(const LinePlot& plot, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << render_svg(plot);
}

nlohmann::json build_info() {
  return {{"choquard", CHOQUARD_VERSION},
          {"compiler", __VERSION__},
          {"cxx_standard", __cplusplus},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                        std::to_string(BOOST_VERSION % 100)}};
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace choquard
