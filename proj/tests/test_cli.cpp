#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "choquard/cli.hpp"
#include "choquard/kernel.hpp"
#include "choquard/output.hpp"

using namespace choquard;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::initializer_list<std::string> args) {
  std::vector<std::string> store = {"choquard"};
  store.insert(store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : store) argv.push_back(s.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("choquard_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

nlohmann::json load(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  auto r = cli({"frobnicate"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("\"kind\":\"usage\"") != std::string::npos);
  CHECK(cli({"solve", "--bogus"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == 0);
  const auto dir = scratch("missing_config");
  CHECK(cli({"-o", dir.string(), "-c", "/nonexistent.cfg", "solve"}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("configuration errors leave a structured record") {
  const auto dir = scratch("bad_alpha");
  auto r = cli({"-o", dir.string(), "solve", "--alpha", "1.5"});
  CHECK(r.code == kExitUsage);
  const auto rec = load(dir / "solve" / "error.json");
  CHECK(rec["error"]["kind"] == "config");
  CHECK(rec["error"]["message"].get<std::string>().find("kernel.alpha") != std::string::npos);
  CHECK(cli({"-o", dir.string(), "-p", "grid.nodes=3", "solve"}).code == kExitUsage);
  CHECK(cli({"-o", dir.string(), "-p", "gridn", "solve"}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("numerical failures exit with 3") {
  const auto dir = scratch("range");
  auto r = cli({"-o", dir.string(), "-p", "grid.n=400", "-p", "nonlinearity.kappa=1e-300", "solve"});
  CHECK(r.code == kExitNumerical);
  CHECK(load(dir / "solve" / "error.json")["error"]["kind"] == "range");
  fs::remove_all(dir);
}

TEST_CASE("kernel-table writes circle averages") {
  const auto dir = scratch("table");
  auto r = cli({"-o", dir.string(), "kernel-table", "--alpha", "0.1", "--points", "6", "--smax", "3"});
  REQUIRE(r.code == kExitPass);
  std::ifstream is(dir / "kernel-table" / "kernel_table.csv");
  std::string line;
  std::getline(is, line);
  CHECK(line == "r,s,average");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    double rr = 0, ss = 0, v = 0;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &rr, &ss, &v) == 3);
    CHECK(v == doctest::Approx(angular_avg_quadrature(KernelSpec::galpha(0.1), rr, ss)).epsilon(1e-8));
    ++rows;
  }
  CHECK(rows == 36);

  REQUIRE(cli({"-o", dir.string(), "kernel-table", "--kind", "log", "--points", "4", "--smax", "2"}).code == 0);
  std::ifstream lg(dir / "kernel-table" / "kernel_table.csv");
  std::getline(lg, line);
  while (std::getline(lg, line)) {
    double rr = 0, ss = 0, v = 0;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &rr, &ss, &v) == 3);
    CHECK(v == doctest::Approx(-std::log(std::max(rr, ss))).epsilon(1e-12));
  }
  CHECK(cli({"-o", dir.string(), "kernel-table", "--kind", "cubic"}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("certify --set moser reports norm residuals") {
  const auto dir = scratch("moser");
  auto r = cli({"-o", dir.string(), "certify", "--set", "moser"});
  CHECK(r.code == kExitPass);
  const auto rep = load(dir / "certify" / "moser.json");
  REQUIRE(rep["rows"].size() == 3);
  for (const auto& row : rep["rows"]) {
    const int n = row["n"];
    const double L = std::log(static_cast<double>(n));
    const double delta = 1.0 / (4.0 * L) - 1.0 / (4.0 * n * n * L) - 1.0 / (2.0 * n * n);
    CHECK(row["closed_form"].get<double>() == doctest::Approx(1.0 + 0.04 * delta).epsilon(1e-14));
    CHECK(row["relative_error"].get<double>() <= 1e-4);
  }
  const auto sum = load(dir / "certify" / "summary.json");
  CHECK(sum["verdicts"]["moser"] == true);
  CHECK(sum["verdicts"].size() == 1);
  CHECK(sum["config"]["certify.sets"] == "moser");
  CHECK(sum.contains("inputs_hash"));
  fs::remove_all(dir);
}

TEST_CASE("check-nonlinearity verdicts follow the audit") {
  const auto dir = scratch("audit");
  CHECK(cli({"-o", dir.string(), "check-nonlinearity"}).code == kExitPass);
  auto r = cli({"-o", dir.string(), "-p", "nonlinearity.q=3", "check-nonlinearity", "--family", "power"});
  CHECK(r.code == kExitVerdict);
  const auto sum = load(dir / "check-nonlinearity" / "summary.json");
  CHECK(sum["verdicts"]["f4"] == false);
  CHECK(sum["verdicts"]["f1"] == true);
  CHECK(fs::exists(dir / "check-nonlinearity" / "ratio.svg"));
  fs::remove_all(dir);
}

TEST_CASE("solve artifacts are reproducible and independent of the worker count") {
  const auto dir = scratch("solve");
  const std::initializer_list<std::string> base = {"-o", dir.string(), "-p", "grid.n=400", "-p",
                                                   "nonlinearity.family=power", "-p", "nonlinearity.q=4", "solve"};
  REQUIRE(cli(base).code == kExitPass);
  const auto s = dir / "solve";
  for (const char* f : {"u_star.csv", "iterations.csv", "summary.json", "timings.json", "profile.svg", "decay.svg"})
    CHECK(fs::exists(s / f));
  const auto u1 = slurp(s / "u_star.csv"), it1 = slurp(s / "iterations.csv"), sum1 = slurp(s / "summary.json");
  const auto svg1 = slurp(s / "profile.svg");
  REQUIRE(cli(base).code == kExitPass);
  CHECK(slurp(s / "u_star.csv") == u1);
  CHECK(slurp(s / "summary.json") == sum1);
  CHECK(slurp(s / "profile.svg") == svg1);

  REQUIRE(cli({"-o", dir.string(), "-p", "grid.n=400", "-p", "nonlinearity.family=power", "-p", "nonlinearity.q=4",
               "-p", "solver.workers=3", "solve"})
              .code == kExitPass);
  CHECK(slurp(s / "u_star.csv") == u1);
  CHECK(slurp(s / "iterations.csv") == it1);

  const auto sum = nlohmann::json::parse(sum1);
  CHECK(sum["grid_hash"].get<std::string>().size() == 16);
  CHECK(sum["config"]["grid.n"] == 400);
  CHECK(sum["result"]["c_level"].get<double>() > 0.0);
  CHECK(sum["verdicts"]["converged"] == true);
  fs::remove_all(dir);
}

TEST_CASE("operator cache from CHOQUARD_CACHE") {
  const auto dir = scratch("cache");
  const auto cache = dir / "ops";
  fs::create_directories(cache);
  ::setenv("CHOQUARD_CACHE", cache.string().c_str(), 1);
  auto r = cli({"-o", dir.string(), "-p", "grid.n=400", "-p", "nonlinearity.family=power", "-p", "nonlinearity.q=4",
                "solve"});
  ::unsetenv("CHOQUARD_CACHE");
  CHECK(r.code == kExitPass);
  CHECK(std::distance(fs::directory_iterator(cache), fs::directory_iterator{}) == 1);
  CHECK(load(dir / "solve" / "summary.json")["config"]["kernel.cache_dir"] == cache.string());
  fs::remove_all(dir);
}

TEST_CASE("continue writes the trace") {
  const auto dir = scratch("continue");
  auto r = cli({"-o", dir.string(), "-p", "grid.n=512", "continue", "--steps", "3"});
  CHECK(r.code == kExitVerdict);
  const auto c = dir / "continue";
  std::ifstream is(c / "trace.csv");
  std::string line;
  std::getline(is, line);
  CHECK(line == "alpha,c,residual,dh1,log_residual,decay_rate");
  for (const char* f : {"u_00.csv", "u_01.csv", "u_02.csv", "trace.svg", "levels.svg"}) CHECK(fs::exists(c / f));
  const auto sum = load(c / "summary.json");
  CHECK(sum["verdicts"]["log_residual"] == false);
  CHECK(sum["verdicts"]["cauchy_decreasing"] == true);
  CHECK(sum["verdicts"]["levels_in_window"] == true);
  CHECK_FALSE(sum["trace"]["steps"][0].contains("seconds"));
  fs::remove_all(dir);
}
