#pragma once

// Subcommand pipelines. Each writes into <output.dir>/<subcommand>/ and returns an exit code:
// 0 every verdict passed, 1 some verdict failed, 2 usage or configuration error, 3 numerical failure.

#include <iosfwd>
#include <optional>
#include <string>

#include "choquard/config.hpp"

namespace choquard {

enum ExitCode : int { kExitPass = 0, kExitVerdict = 1, kExitUsage = 2, kExitNumerical = 3 };

struct KernelTableArgs {
  std::string kind = "galpha";
  std::optional<double> alpha;  // kernel.alpha when unset
  std::size_t points = 41;
  double s_max = 10.0;
};

const std::vector<std::string>& subcommands();

/// Runs one pipeline; module errors propagate as exceptions.
int dispatch(const std::string& subcommand, const RunConfig& cfg, std::ostream& log,
             const KernelTableArgs& table = {});

/// Full entry point: argument parsing, config loading, error records and exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace choquard
