#include "choquard/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "choquard/errors.hpp"

namespace choquard {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

std::size_t to_count(const std::string& key, const std::string& v, long long lo) {
  const long long x = to_int(key, v);
  if (x < lo) throw ConfigError(key + ": must be at least " + std::to_string(lo) + ", got " + v);
  return static_cast<std::size_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw ConfigError(key + ": expected on/off, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"grid.n", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.n = to_count(k, v, 16); }},
      {"grid.rmax", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.r_max = to_double(k, v); }},
      {"grid.grade", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.grade = to_double(k, v); }},
      {"grid.core_cut",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.core_cut = to_double(k, v); }},
      {"nonlinearity.family",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.nonlinearity.family = family_from_string(v);
         } catch (const ConfigError&) {
           throw ConfigError(k + ": unknown family '" + v + "' (power, exp_critical, paper_example)");
         }
       }},
      {"nonlinearity.kappa",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.nonlinearity.kappa = to_double(k, v); }},
      {"nonlinearity.q",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.nonlinearity.q = to_double(k, v); }},
      {"nonlinearity.a",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.nonlinearity.a = to_double(k, v); }},
      {"nonlinearity.tau",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.nonlinearity.tau = to_double(k, v); }},
      {"nonlinearity.beta",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.nonlinearity.beta = to_double(k, v); }},
      {"nonlinearity.rho",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.nonlinearity.rho = to_double(k, v); }},
      {"kernel.alpha", [](RunConfig& c, const std::string& k, const std::string& v) { c.kernel_alpha = to_double(k, v); }},
      {"kernel.cache_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.cache_dir = v; }},
      {"solver.path_nodes",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.path_nodes = to_count(k, v, 2); }},
      {"solver.tol", [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.tol = to_double(k, v); }},
      {"solver.max_iter",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.max_iter = to_count(k, v, 1); }},
      {"solver.newton", [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.newton = to_bool(k, v); }},
      {"solver.workers",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.solver.workers = static_cast<unsigned>(to_count(k, v, 1));
       }},
      {"continuation.alpha0",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.continuation.alpha0 = to_double(k, v); }},
      {"continuation.steps",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.continuation.steps = to_count(k, v, 1); }},
      {"continuation.omega",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.continuation.omega = to_double(k, v); }},
      {"continuation.decay_R",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.continuation.decay_R = to_double(k, v); }},
      {"certify.sets",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         auto sets = split_list(v);
         const auto known = known_cert_sets();
         for (const auto& s : sets)
           if (std::find(known.begin(), known.end(), s) == known.end())
             throw ConfigError(k + ": unknown certificate set '" + s + "'");
         c.certify.sets = std::move(sets);
       }},
      {"certify.seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.certify.seed = static_cast<unsigned>(to_count(k, v, 0));
       }},
      {"certify.hls_trials",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.certify.hls_trials = to_count(k, v, 1); }},
      {"certify.moser_n",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.certify.moser_n = static_cast<int>(to_count(k, v, 2));
       }},
      {"output.dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
      {"output.svg", [](RunConfig& c, const std::string& k, const std::string& v) { c.output_svg = to_bool(k, v); }},
  };
  return table;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

std::vector<std::string> known_cert_sets() { return {"moser", "level", "hls", "kernel", "tail"}; }

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

std::size_t operator_table_bytes(std::size_t n) { return n * n * sizeof(double); }

void validate(RunConfig& c) {
  require(c.grid.r_max > 0.0, "grid.rmax: must be positive");
  require(c.grid.grade >= 1.0, "grid.grade: must be at least 1");
  require(c.grid.core_cut > 0.0 && c.grid.core_cut < c.grid.r_max, "grid.core_cut: must lie in (0, grid.rmax)");
  require(c.kernel_alpha > 0.0 && c.kernel_alpha < 1.0, "kernel.alpha: must lie in (0, 1), got " + fmt(c.kernel_alpha));
  require(c.nonlinearity.kappa > 0.0, "nonlinearity.kappa: must be positive");
  require(c.nonlinearity.q > 2.0, "nonlinearity.q: must exceed 2");
  require(c.nonlinearity.a >= 0.0, "nonlinearity.a: must be nonnegative (0 selects 4 pi)");
  if (c.nonlinearity.tau) require(*c.nonlinearity.tau > 0.0 && *c.nonlinearity.tau < 1.0, "nonlinearity.tau: must lie in (0, 1)");
  if (c.nonlinearity.beta) require(*c.nonlinearity.beta > 0.0, "nonlinearity.beta: must be positive");
  require(c.nonlinearity.rho > 0.0 && c.nonlinearity.rho < 0.25, "nonlinearity.rho: must lie in (0, 1/4)");
  require(c.solver.tol > 0.0, "solver.tol: must be positive");
  require(c.continuation.alpha0 > 0.0 && c.continuation.alpha0 < 1.0, "continuation.alpha0: must lie in (0, 1)");
  require(c.continuation.omega > 1.0, "continuation.omega: must exceed 1");
  require(c.continuation.decay_R > 0.0 && 2.0 * c.continuation.decay_R < c.grid.r_max,
          "continuation.decay_R: must lie in (0, grid.rmax / 2)");
  const std::size_t bytes = operator_table_bytes(c.grid.n);
  const OperatorOptions defaults;
  if (bytes > defaults.memory_limit) {
    std::ostringstream os;
    os << "grid.n = " << c.grid.n << ": a dense operator table needs " << bytes / (1u << 20)
       << " MiB, above the " << defaults.memory_limit / (1u << 20) << " MiB limit; solve and continue will refuse it";
    c.warnings.push_back(os.str());
  }
}

RunConfig parse_config_text(std::string_view text, std::string_view origin) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(lineno);
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'section.key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

SolverOptions RunConfig::solver_options() const {
  SolverOptions o;
  o.path_nodes = solver.path_nodes;
  o.tol = solver.tol;
  o.max_iter = solver.max_iter;
  o.newton = solver.newton;
  o.workers = solver.workers;
  return o;
}

OperatorOptions RunConfig::operator_options() const {
  OperatorOptions o;
  o.cache_dir = cache_dir;
  if (const char* env = std::getenv("CHOQUARD_CACHE"); env && *env) o.cache_dir = env;
  o.workers = solver.workers;
  return o;
}

nlohmann::json RunConfig::echo() const {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  std::string sets;
  for (const auto& s : certify.sets) sets += (sets.empty() ? "" : ",") + s;
  return {{"grid.n", grid.n},
          {"grid.rmax", grid.r_max},
          {"grid.grade", grid.grade},
          {"grid.core_cut", grid.core_cut},
          {"nonlinearity.family", to_string(nonlinearity.family)},
          {"nonlinearity.kappa", nonlinearity.kappa},
          {"nonlinearity.q", nonlinearity.q},
          {"nonlinearity.a", nonlinearity.a},
          {"nonlinearity.tau", opt(nonlinearity.tau)},
          {"nonlinearity.beta", opt(nonlinearity.beta)},
          {"nonlinearity.rho", nonlinearity.rho},
          {"kernel.alpha", kernel_alpha},
          {"kernel.cache_dir", operator_options().cache_dir.string()},
          {"solver.path_nodes", solver.path_nodes},
          {"solver.tol", solver.tol},
          {"solver.max_iter", solver.max_iter},
          {"solver.newton", solver.newton},
          {"solver.workers", solver.workers},
          {"continuation.alpha0", continuation.alpha0},
          {"continuation.steps", continuation.steps},
          {"continuation.omega", continuation.omega},
          {"continuation.decay_R", continuation.decay_R},
          {"certify.sets", sets},
          {"certify.seed", certify.seed},
          {"certify.hls_trials", certify.hls_trials},
          {"certify.moser_n", certify.moser_n},
          {"output.dir", output_dir.string()},
          {"output.svg", output_svg}};
}

std::uint64_t RunConfig::hash() const {
  // keys that cannot change results are left out
  auto e = echo();
  e.erase("solver.workers");
  e.erase("kernel.cache_dir");
  e.erase("output.dir");
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : e.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace choquard
