#pragma once

// Nonlinearities F (primitive), f = F', f' = F'' with the declared constants of the
// growth assumptions, and the auxiliary transforms Q = F/f and
// H(t) = int_0^t sqrt(F f') / f ds used by the boundedness arguments.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace choquard {

enum class Family { power, exp_critical, paper_example };

std::string to_string(Family f);
Family family_from_string(const std::string& name);

/// User-facing parameters; unset constants take the family defaults.
struct NonlinearityParams {
  Family family = Family::exp_critical;
  double kappa = 1.0;
  double q = 3.0;
  double a = 0.0;  // 0 selects 4*pi
  std::optional<double> tau;
  std::optional<double> C;
  std::optional<double> beta;
  double rho = 0.2;
};

class Nonlinearity {
 public:
  static Nonlinearity power(double kappa, double q);
  static Nonlinearity exp_critical(double kappa = 1.0, double a = 0.0);
  static Nonlinearity paper_example();
  static Nonlinearity from_params(const NonlinearityParams& p);

  Family family() const noexcept { return family_; }
  std::string name() const { return to_string(family_); }

  /// Zero for t <= 0; RangeError past domain_max().
  double F(double t) const;
  double f(double t) const;
  double fprime(double t) const;
  /// F f' / f^2 for t > 0 (the (f2) quotient), evaluated without 0/0.
  double ratio(double t) const;
  /// F / f for t > 0, (1 - tau) t for t <= 0.
  double quotient(double t) const;
  /// int_0^t sqrt(ratio(s)) ds, t >= 0.
  double H(double t) const;
  /// t F(t) / e^{a t^2}, the (f4) quantity.
  double fm_quantity(double t) const;

  double kappa() const noexcept { return kappa_; }
  double q() const noexcept { return q_; }
  double a() const noexcept { return a_; }
  double tau() const noexcept { return tau_; }
  double C() const noexcept { return C_; }
  double beta() const noexcept { return beta_; }
  double rho() const noexcept { return rho_; }
  /// Exponent p of the (f1) envelope f(t) <= C t^p e^{4 pi t^2}.
  double p() const noexcept { return p_; }
  double domain_max() const noexcept { return domain_max_; }
  /// Point where the closed form stops being admissible, if the family has one.
  std::optional<double> singularity() const;

  Nonlinearity with_constants(std::optional<double> tau, std::optional<double> C,
                              std::optional<double> beta, std::optional<double> rho) const;

 private:
  Nonlinearity() = default;
  void check_domain(double t) const;

  Family family_ = Family::exp_critical;
  double kappa_ = 1.0;
  double q_ = 3.0;
  double a_ = 0.0;
  double tau_ = 0.6;
  double C_ = 1.05;
  double beta_ = 10.0;
  double rho_ = 0.2;
  double p_ = 4.0;
  double domain_max_ = 7.0;
};

/// The (f4) threshold 1 / (rho^2 sqrt(ln 2) pi^{3/2}).
double fm_threshold(double rho);

struct AssumptionCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;    // the measured quantity
  double witness = 0.0;  // the t where it was measured (or where it failed)
  std::string detail;
};

struct AssumptionReport {
  std::string family;
  std::vector<AssumptionCheck> checks;
  double ratio_min = 0.0, ratio_max = 0.0;
  double ratio_min_at = 0.0, ratio_max_at = 0.0;
  double ratio_terminal = 0.0;
  double fm_terminal = 0.0;
  double threshold = 0.0;
  double f5_M0 = 0.0, f5_t0 = 1.0;
  double envelope_C = 0.0, envelope_tbar = 0.0, envelope_ttilde = 1.0;
  bool domain_singularity = false;
  double singularity_at = 0.0;

  const AssumptionCheck* find(const std::string& name) const;
  bool passes(const std::string& name) const;
  std::vector<std::string> failing() const;
  nlohmann::json to_json() const;
};

/// Audits (f1)-(f4), the (1.4) envelope, F <= M0 f and F <= (1-tau) f t on the mesh.
AssumptionReport check_assumptions(const Nonlinearity& nl, std::span<const double> t_mesh);
/// Uniform mesh of `count` points on (0, nl.domain_max()].
std::vector<double> default_t_mesh(const Nonlinearity& nl, std::size_t count = 4000);

}  // namespace choquard
