#pragma once

// Run configuration: flat `section.key = value` lines, '#' starts a comment.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "choquard/grid.hpp"
#include "choquard/kernel.hpp"
#include "choquard/nonlinearity.hpp"
#include "choquard/solver.hpp"

namespace choquard {

struct SolverConfig {
  std::size_t path_nodes = 21;
  double tol = 1e-8;
  std::size_t max_iter = 4000;
  bool newton = true;
  unsigned workers = 1;
};

struct ContinuationConfig {
  double alpha0 = 0.5;
  std::size_t steps = 9;
  double omega = 1.05;
  double decay_R = 5.0;
};

struct CertifyConfig {
  std::vector<std::string> sets = {"moser", "level", "hls", "kernel", "tail"};
  unsigned seed = 2024;
  std::size_t hls_trials = 50;
  int moser_n = 50;
};

struct RunConfig {
  GridSpec grid;
  NonlinearityParams nonlinearity;
  double kernel_alpha = 0.5;
  std::filesystem::path cache_dir;
  SolverConfig solver;
  ContinuationConfig continuation;
  CertifyConfig certify;
  std::filesystem::path output_dir = "choquard_out";
  bool output_svg = true;

  std::vector<std::string> warnings;

  SolverOptions solver_options() const;
  /// CHOQUARD_CACHE, when set, replaces kernel.cache_dir.
  OperatorOptions operator_options() const;
  /// Every key with its resolved value, in key order.
  nlohmann::json echo() const;
  /// FNV-1a of the serialized echo.
  std::uint64_t hash() const;
};

/// Names of every accepted key.
const std::vector<std::string>& config_keys();
std::vector<std::string> known_cert_sets();

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view text, std::string_view origin = "<config>");
/// Sets one key as if it appeared in a file; errors name the key.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
/// Range checks across keys and the memory warning; called by the parsers.
void validate(RunConfig& cfg);

/// Bytes of one dense N x N operator table.
std::size_t operator_table_bytes(std::size_t n);

}  // namespace choquard
