#pragma once

// Mountain-pass critical points of the discrete energy: a path from 0 to a negative-energy
// endpoint is deformed by Sobolev-gradient steps at its highest node, and the highest node
// is then polished by damped Newton.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "choquard/energy.hpp"

namespace choquard {

struct Endpoint {
  explicit Endpoint(RadialFunction e_) : e(std::move(e_)) {}
  RadialFunction e;
  double t0 = 0.0;
  double level = 0.0;  // I(e) < 0
};

/// Doubling scan then bisection on the sign of I(t e0); throws RangeError when t e0 leaves the domain first.
Endpoint find_endpoint(const EnergyModel& model, double t_start = 0.25);

struct SolverOptions {
  std::size_t path_nodes = 21;  // m: the path has m + 1 states
  double tol = 1e-8;            // Newton target for residual()
  double tol_path = 1e-3;       // hand-off threshold of the path phase
  std::size_t max_iter = 4000;
  bool newton = true;
  std::size_t max_newton = 30;
  double armijo_c = 1e-4;
  double endpoint_scale = 1.0;
  unsigned workers = 1;
  std::optional<RadialFunction> warm_start;  // try Newton from here before the path phase
};

struct NewtonResult {
  explicit NewtonResult(RadialFunction u_) : u(std::move(u_)) {}
  RadialFunction u;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool used_fallback = false;
  double jacobian_check = 0.0;  // relative FD error on spot columns, measured on entry
  std::vector<double> history;  // residual per iteration, starting value first
  std::vector<double> levels;   // energy alongside history
  std::vector<double> steps;    // accepted damping per iteration
  std::string message;
};

NewtonResult refine_newton(const EnergyModel& model, const RadialFunction& u0, const SolverOptions& opts = {});

/// Max relative error of Jacobian columns against central differences of the derivative.
double jacobian_fd_error(const EnergyModel& model, std::span<const double> u, std::size_t columns = 6);

struct IterationRecord {
  std::size_t iter = 0;
  double c_level = 0.0;
  double residual = 0.0;
  double step = 0.0;
  std::string phase;  // "path" or "newton"
};

struct MountainPassResult {
  explicit MountainPassResult(RadialFunction u) : u_star(std::move(u)) {}
  RadialFunction u_star;
  double c_level = 0.0;
  double residual = 0.0;     // H1-dual norm with the Cerami weight
  double l2_residual = 0.0;  // weighted-L2 norm with the Cerami weight
  std::vector<double> path_levels;
  std::vector<IterationRecord> log;
  std::size_t iterations = 0;
  std::size_t newton_iterations = 0;
  double alpha = 0.0;
  double t0 = 0.0;
  bool positivity_flag = false;
  bool converged = false;
  bool warm_started = false;
  double jacobian_check = 0.0;
  EnergyBreakdown breakdown;
  std::string message;

  nlohmann::json to_json() const;
};

MountainPassResult mountain_pass(const EnergyModel& model, const SolverOptions& opts = {});

struct DiagReport {
  double norm_sq = 0.0;
  double c_level = 0.0;
  double tau = 0.0;
  double tau_bound_lhs = 0.0;  // tau ||u||^2
  double H_norm_sq = 0.0;      // ||H(u)||^2
  double quotient_violation = 0.0;  // max(|F/f| - (1 - tau)|u|), clipped at 0
  double slack = 1e-6;
  bool tau_bound = false;
  bool H_bound = false;
  bool quotient_bound = false;
  bool pass() const { return tau_bound && H_bound && quotient_bound; }
  nlohmann::json to_json() const;
};

DiagReport cerami_diagnostics(const RadialFunction& u, const Nonlinearity& nl, double c_level, double slack = 1e-6);

}  // namespace choquard
