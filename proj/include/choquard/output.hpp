#pragma once

// Run artifacts: JSON documents, numeric CSV tables and plain SVG line plots.
// All writers format deterministically so reruns are byte-identical.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace choquard {

void write_json(const nlohmann::json& j, const std::filesystem::path& path);

/// %.17g.
std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(const std::vector<double>& row);
  void add_cells(std::vector<std::string> row);
  void write(const std::filesystem::path& path) const;
  std::string str() const;
};

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct LinePlot {
  std::string title;
  std::string x_label, y_label;
  bool log_y = false;
  std::vector<Series> series;
  /// Dashed horizontal reference lines.
  std::vector<std::pair<std::string, double>> hlines;
};

std::string render_svg(const LinePlot& plot, int width = 640, int height = 400);
void write_svg(const LinePlot& plot, const std::filesystem::path& path);

/// Version, compiler and library versions for run summaries.
nlohmann::json build_info();

/// 16 hex digits.
std::string hex64(std::uint64_t h);

}  // namespace choquard
