#pragma once

// Closed-form test functions and inequality checks: Moser caps, the level curve t -> I(t w_n)
// with its analytic majorant, radial decay and the HLS quotient.

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "choquard/energy.hpp"
#include "choquard/report.hpp"

namespace choquard {

struct MoserConfig {
  int n = 50;
  double rho = 0.2;
  void validate() const;
};

/// delta_n with ||w_n||^2 = 1 + rho^2 delta_n.
double moser_delta(int n);
double moser_norm_closed(const MoserConfig& cfg);
/// Pointwise w_n(r).
double moser_value(const MoserConfig& cfg, double r);
/// `base` with the kinks rho / n and rho inserted.
GridPtr moser_grid(const RadialGrid& base, const MoserConfig& cfg);
/// Requires nodes at both kinks and at least four nodes inside B_{rho/n}.
RadialFunction moser_w(const MoserConfig& cfg, GridPtr grid);

/// t_n^2 = 1 + (ln(1 + rho^2 delta_n) - ln 4) / (4 ln n).
double t_n_squared(const MoserConfig& cfg);
/// psi_n(t) = (1 + delta_n rho^2) t^2 / 2 - n^{4(t^2 - 1)} / (2 ln n).
double psi_n(const MoserConfig& cfg, double t);
/// g(n, t) = n^{4(t^2 - 1)} / (t^4 ln n).
double g_case2(double n, double t);
/// Smallest n >= 2 with g(n, t) >= 1 on the whole mesh (t >= sqrt 2), searched up to n_max; 0 if none.
int case2_n0(std::span<const double> t_mesh, int n_max = 100000);
/// Smallest n such that every n' in [n, n_max] has t_n' in [sqrt(1/2), sqrt 2] and psi_n'(t_n') < 1/2; 0 if none.
int psi_threshold_n(double rho, int n_max = 100000);

struct LevelCertificate {
  MoserConfig cfg;
  double alpha = 0.0;
  std::vector<double> t_mesh;
  std::vector<double> levels;
  double max_level = 0.0;
  double argmax_t = 0.0;
  double t_negative = 0.0;  // first mesh t past the maximum with a negative level, 0 if none
  double case1_end = 0.0;   // sqrt(1/2)
  double case3_end = 0.0;   // sqrt 2
  std::vector<double> psi;  // psi_n on the middle case, NaN elsewhere
  double t_n = 0.0;
  double psi_at_t_n = 0.0;
  int n_min = 0;
  double epsilon = 0.0;  // half the gap beta - threshold
  double t_epsilon = 0.0;
  double log_bound_violation = 0.0;  // I - (t^2/2 ||w||^2 - log term), max over mesh
  double ln2_bound_violation = 0.0;  // (ln 2 / 2)(int F)^2 - log term, max over mesh
  std::size_t majorant_points = 0;   // mesh points where the majorant applies
  double majorant_violation = 0.0;
  bool verdict_a = false;  // max level < 1/2
  bool verdict_b = false;  // psi_n(t_n) < 1/2 and n >= n_min
  bool verdict_c = false;  // level <= psi_n wherever it applies (vacuous if nowhere)
  bool majorant_applicable = false;

  bool pass() const { return verdict_a && verdict_b && verdict_c; }
  nlohmann::json to_json() const;
};

/// Mesh from 0 in steps of dt until the level is negative past its maximum or t w_n(0) hits the domain.
std::vector<double> level_t_mesh(const MoserConfig& cfg, const EnergyModel& model, double dt = 0.01);

/// `model` must use the G_alpha kernel on a grid that resolves w_n; `log_op` feeds the log-kernel bounds.
LevelCertificate level_certificate(const MoserConfig& cfg, const EnergyModel& model, const ConvolutionOperator& log_op,
                                   std::span<const double> t_mesh);

/// sup_{r >= 1} |u(r)| r^{1/2} / ||u||.
CertResult radial_bound_check(const RadialFunction& u);

struct DecayFit {
  double M = 0.0;
  double rate = 0.0;
  double r_lo = 0.0, r_hi = 0.0;
  double max_ratio = 0.0;  // max u(r) / (M e^{-r/2}) on the fit window
  bool applicable = false;
  bool pass = false;
  CertResult to_result() const;
};

/// Least squares of ln u on [R_fit, R_max / 2]; pass iff rate >= 0.45 and u <= 1.05 M e^{-r/2} there.
DecayFit decay_certificate(const RadialFunction& u, double R_fit);

/// Max of the discrete HLS quotient over seeded random nonnegative profile pairs against 2 sqrt(pi) (1 + 1e-3).
CertResult hls_certificate(const ConvolutionOperator& riesz_op, std::size_t trials, unsigned seed = 2024);
CertResult hls_certificate(double alpha, std::size_t trials, unsigned seed = 2024);

}  // namespace choquard
