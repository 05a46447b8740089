#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "choquard/errors.hpp"
#include "choquard/output.hpp"

using namespace choquard;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("doubles round-trip through text") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = std::exp(u(rng)) * (k % 2 ? -1.0 : 1.0);
    CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("csv tables") {
  CsvTable t;
  t.header = {"a", "b"};
  t.add({1.0, 0.25});
  t.add_cells({"x", "y"});
  CHECK(t.str() == "a,b\n1,0.25\nx,y\n");
  CHECK_THROWS_AS(t.add({1.0}), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "choquard_out_test" / "t.csv";
  t.write(path);
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  CHECK(ss.str() == t.str());
  std::filesystem::remove_all(path.parent_path());
}

TEST_CASE("svg line plots") {
  LinePlot p{"a <b> & c", "x", "y", false, {{"one", {0, 1, 2}, {0, 1, 4}}, {"two", {0, 2}, {1, 1}}}, {{"ref", 2.0}}};
  const auto svg = render_svg(p);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "<polyline") == 2);
  CHECK(svg.find("a &lt;b&gt; &amp; c") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(render_svg(p) == svg);

  // nonpositive samples are dropped on a log axis
  LinePlot lg{"log", "x", "y", true, {{"s", {0, 1, 2, 3}, {1e-3, 0.0, -1.0, 1e-1}}}, {}};
  const auto s2 = render_svg(lg);
  const auto pts = s2.substr(s2.find("points=\""));
  CHECK(count(pts.substr(0, pts.find("\"/>")), ",") == 2);
  CHECK(s2.find("nan") == std::string::npos);

  LinePlot empty{"nothing", "x", "y", false, {}, {}};
  CHECK(render_svg(empty).find("</svg>") != std::string::npos);
}

TEST_CASE("json writer and metadata") {
  const auto path = std::filesystem::temp_directory_path() / "choquard_out_test.json";
  write_json({{"k", 1.5}}, path);
  std::ifstream is(path);
  auto j = nlohmann::json::parse(is);
  CHECK(j["k"] == 1.5);
  std::filesystem::remove(path);
  const auto b = build_info();
  CHECK(b.contains("choquard"));
  CHECK(b.contains("eigen"));
  CHECK(hex64(0) == "0000000000000000");
  CHECK(hex64(0xdeadbeefull) == "00000000deadbeef");
}
