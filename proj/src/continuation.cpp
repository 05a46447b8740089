#include "choquard/continuation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "choquard/errors.hpp"

namespace choquard {

std::vector<double> geometric_schedule(double alpha0, std::size_t steps) {
  if (!(alpha0 > 0.0 && alpha0 < 1.0)) throw ConfigError("continuation.alpha0 must lie in (0, 1)");
  if (steps == 0) throw ConfigError("continuation.steps must be positive");
  std::vector<double> s(steps);
  for (std::size_t k = 0; k < steps; ++k) s[k] = std::ldexp(alpha0, -static_cast<int>(k));
  return s;
}

nlohmann::json ContinuationTrace::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : steps) {
    rows.push_back({{"alpha", s.alpha},
                    {"c", s.c},
                    {"residual", s.residual},
                    {"l2_residual", s.l2_residual},
                    {"dh1", s.dh1},
                    {"log_residual", s.log_residual},
                    {"energy_log", s.energy_log},
                    {"decay", s.decay.to_result().to_json()},
                    {"converged", s.converged},
                    {"warm_started", s.warm_started},
                    {"newton_iterations", s.newton_iterations},
                    {"seconds", s.seconds}});
  }
  nlohmann::json j = {{"schedule", schedule},
                      {"steps", rows},
                      {"truncated", truncated},
                      {"message", message},
                      {"cauchy_decreasing", cauchy_decreasing},
                      {"levels_in_window", levels_in_window},
                      {"level_min", level_min},
                      {"level_max", level_max},
                      {"nontrivial", nontrivial},
                      {"final_log_residual", final_log_residual},
                      {"log_residual_ok", log_residual_ok},
                      {"decay_uniform", decay_uniform},
                      {"min_rate_small_alpha", min_rate_small_alpha},
                      {"pass", pass()}};
  if (polished_log_residual) j["polished_log_residual"] = *polished_log_residual;
  if (polished_distance) j["polished_distance"] = *polished_distance;
  return j;
}

ContinuationTrace run_continuation(const Nonlinearity& nl, GridPtr grid, std::span<const double> schedule,
                                   const ContinuationOptions& opts) {
  if (schedule.empty()) throw ConfigError("continuation schedule is empty");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] > 0.0 && schedule[k] < 1.0)) throw ConfigError("continuation alphas must lie in (0, 1)");
    if (k > 0 && !(schedule[k] < schedule[k - 1])) throw ConfigError("continuation schedule must strictly decrease");
  }
  ContinuationTrace trace;
  trace.schedule.assign(schedule.begin(), schedule.end());
  auto log_op = std::make_shared<const ConvolutionOperator>(build_operator(grid, KernelSpec::log(), opts.operators));

  std::optional<RadialFunction> prev;
  for (double alpha : schedule) {
    const auto t0 = std::chrono::steady_clock::now();
    auto op = std::make_shared<const ConvolutionOperator>(build_operator(grid, KernelSpec::galpha(alpha), opts.operators));
    EnergyModel model(nl, op);
    SolverOptions so = opts.solver;
    if (prev) so.warm_start = *prev;
    MountainPassResult r = [&]() {
      try {
        return mountain_pass(model, so);
      } catch (const std::exception& e) {
        trace.truncated = true;
        trace.message = "solve failed at alpha = " + std::to_string(alpha) + ": " + e.what();
        return MountainPassResult(RadialFunction::zeros(grid));
      }
    }();
    if (trace.truncated) break;
    if (!r.converged) {
      trace.truncated = true;
      trace.message = "no convergence at alpha = " + std::to_string(alpha) + ": " + r.message;
      break;
    }
    ContinuationStep step(r.u_star);
    step.alpha = alpha;
    step.c = r.c_level;
    step.residual = r.residual;
    step.l2_residual = r.l2_residual;
    step.converged = r.converged;
    step.warm_started = r.warm_started;
    step.newton_iterations = r.newton_iterations;
    step.dh1 = prev ? h1_norm(r.u_star - *prev) : 0.0;
    step.log_residual = log_residual(r.u_star, nl, *log_op);
    step.energy_log = energy_log(r.u_star, nl, log_op);
    step.decay = decay_certificate(r.u_star, opts.decay_R);
    step.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (h1_norm(r.u_star) < 10.0 * so.tol) {
      trace.steps.push_back(std::move(step));
      trace.truncated = true;
      trace.message = "trivial-limit: ||u|| collapsed at alpha = " + std::to_string(alpha);
      break;
    }
    prev = r.u_star;
    trace.steps.push_back(std::move(step));
  }
  if (trace.steps.empty()) return trace;

  const auto& last = trace.steps.back();
  trace.nontrivial = h1_norm(last.u) >= 10.0 * opts.solver.tol;
  trace.final_log_residual = last.log_residual;
  trace.log_residual_ok = last.log_residual <= 1e-3;

  trace.level_min = trace.level_max = trace.steps.front().c;
  for (const auto& s : trace.steps) {
    trace.level_min = std::min(trace.level_min, s.c);
    trace.level_max = std::max(trace.level_max, s.c);
  }
  trace.levels_in_window = trace.level_min > opts.level_lo && trace.level_max < opts.level_hi;

  // differences exist from the second step on
  std::vector<double> diffs;
  for (std::size_t k = 1; k < trace.steps.size(); ++k) diffs.push_back(trace.steps[k].dh1);
  if (diffs.size() < 2) {
    trace.cauchy_decreasing = true;
  } else {
    const std::size_t from = diffs.size() > opts.cauchy_window ? diffs.size() - opts.cauchy_window : 0;
    trace.cauchy_decreasing = true;
    for (std::size_t k = from + 1; k < diffs.size(); ++k)
      if (!(diffs[k] < diffs[k - 1])) trace.cauchy_decreasing = false;
  }

  trace.decay_uniform = true;
  trace.min_rate_small_alpha = std::numeric_limits<double>::infinity();
  for (const auto& s : trace.steps) {
    if (s.alpha > opts.alpha_star) continue;
    trace.min_rate_small_alpha = std::min(trace.min_rate_small_alpha, s.decay.rate);
    if (!s.decay.applicable || !(s.decay.rate >= 0.45)) trace.decay_uniform = false;
  }
  if (!std::isfinite(trace.min_rate_small_alpha)) trace.min_rate_small_alpha = 0.0;

  if (opts.polish_log && !trace.truncated) {
    EnergyModel log_model(nl, log_op);
    auto nr = refine_newton(log_model, last.u, opts.solver);
    if (nr.converged) {
      trace.polished_log_residual = log_residual(nr.u, nl, *log_op);
      trace.polished_distance = h1_norm(nr.u - last.u);
    }
  }
  return trace;
}

double admissible_alpha_max(double omega) {
  if (!(omega > 1.0)) throw ConfigError("omega must exceed 1");
  return 4.0 * (omega - 1.0) / (3.0 * omega);
}

CertResult tail_kernel_bound_check(double alpha, double omega, std::size_t mesh_points, double s_max) {
  CertResult res;
  res.name = "tail_kernel_bound";
  const double amax = admissible_alpha_max(omega);
  res.data = {{"alpha", alpha}, {"omega", omega}, {"admissible_alpha_max", amax}};
  if (!(alpha > 0.0 && alpha < amax)) {
    res.applicable = false;
    res.detail = "alpha outside (0, 4(omega-1)/(3 omega))";
    return res;
  }
  if (mesh_points < 2 || !(s_max > 1.0)) throw ConfigError("tail kernel check needs a mesh on [1, s_max]");
  double worst_far = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mesh_points; ++k) {
    const double s = 1.0 + (s_max - 1.0) * static_cast<double>(k) / static_cast<double>(mesh_points - 1);
    const double G = std::abs(g_alpha(s, alpha));
    worst_far = std::max({worst_far, G - std::log(s), std::log(s) - s});
  }
  const double e = amax;
  double C = 0.0, C_at = 0.0;
  for (std::size_t k = 1; k <= mesh_points; ++k) {
    // log-spaced on (1e-12, 1]
    const double s = std::pow(10.0, -12.0 + 12.0 * static_cast<double>(k) / static_cast<double>(mesh_points));
    const double v = g_alpha(s, alpha) * std::pow(s, e);
    if (v > C) {
      C = v;
      C_at = s;
    }
  }
  res.value = C;
  res.pass = worst_far <= 1e-12 && std::isfinite(C);
  res.detail = res.pass ? "|G_alpha(s)| <= ln s <= s on [1, s_max]; near-field constant finite"
                        : "far-field bound violated";
  res.data["far_violation"] = std::max(worst_far, 0.0);
  res.data["near_constant"] = C;
  res.data["near_constant_at"] = C_at;
  res.data["exponent"] = e;
  return res;
}

}  // namespace choquard
