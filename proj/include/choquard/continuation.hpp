#pragma once

// alpha -> 0 with warm starts: each step solves the G_alpha problem from the previous profile
// and measures how far the result is from solving the logarithmic equation.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "choquard/certificates.hpp"
#include "choquard/solver.hpp"

namespace choquard {

/// alpha_k = alpha0 2^{-k}, k = 0..steps-1.
std::vector<double> geometric_schedule(double alpha0 = 0.5, std::size_t steps = 9);

struct ContinuationOptions {
  SolverOptions solver;
  OperatorOptions operators;
  double decay_R = 5.0;
  double alpha_star = 0.1;       // decay must pass for every alpha_k <= alpha_star
  double level_lo = 0.0;         // c_k must lie in (level_lo, level_hi)
  double level_hi = 0.5;
  std::size_t cauchy_window = 4;  // last differences that must decrease
  bool polish_log = true;        // Newton on the log equation from u_K, diagnostic only
};

struct ContinuationStep {
  explicit ContinuationStep(RadialFunction u_) : u(std::move(u_)) {}
  double alpha = 0.0;
  RadialFunction u;
  double c = 0.0;
  double residual = 0.0;
  double l2_residual = 0.0;
  double dh1 = 0.0;  // ||u_k - u_{k-1}||, 0 for the first step
  double log_residual = 0.0;
  double energy_log = 0.0;
  DecayFit decay;
  bool converged = false;
  bool warm_started = false;
  std::size_t newton_iterations = 0;
  double seconds = 0.0;
};

struct ContinuationTrace {
  std::vector<double> schedule;
  std::vector<ContinuationStep> steps;
  bool truncated = false;
  std::string message;

  bool cauchy_decreasing = false;
  bool levels_in_window = false;
  bool nontrivial = false;
  bool log_residual_ok = false;
  bool decay_uniform = false;
  double final_log_residual = 0.0;
  double level_min = 0.0, level_max = 0.0;
  double min_rate_small_alpha = 0.0;

  std::optional<double> polished_log_residual;  // after Newton on the log equation
  std::optional<double> polished_distance;      // ||u0 - u_K||

  bool pass() const { return !truncated && cauchy_decreasing && levels_in_window && nontrivial && log_residual_ok && decay_uniform; }
  nlohmann::json to_json() const;
};

/// Runs the schedule on `grid`; a failed solve truncates the trace and names the step.
ContinuationTrace run_continuation(const Nonlinearity& nl, GridPtr grid, std::span<const double> schedule,
                                   const ContinuationOptions& opts = {});

/// Checks |G_alpha(s)| <= ln s <= s on s >= 1 and reports sup_{s <= 1} G_alpha(s) s^{4(omega-1)/(3 omega)}.
CertResult tail_kernel_bound_check(double alpha, double omega = 1.05, std::size_t mesh_points = 4000,
                                   double s_max = 40.0);

/// Upper end 4(omega - 1) / (3 omega) of the admissible alpha interval.
double admissible_alpha_max(double omega);

}  // namespace choquard
