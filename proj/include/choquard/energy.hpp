#pragma once

// Discrete energies I_K(u) = 1/2 ||u||^2 - 1/2 <F(u), K * F(u)> for K = G_alpha (the
// modified functional) or K = ln(1/|x|) (the logarithmic one), with derivative and
// Jacobian that are exact for the discrete quadratic form and quadrature.

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "choquard/grid.hpp"
#include "choquard/kernel.hpp"
#include "choquard/nonlinearity.hpp"
#include "choquard/report.hpp"

namespace choquard {

struct EnergyBreakdown {
  double quadratic = 0.0;
  double mass = 0.0;    // (1/2 alpha) (int F)^2
  double riesz = 0.0;   // (1/2 alpha) <F, |x|^{-alpha} * F>
  double galpha = 0.0;  // 1/2 <F, G_alpha * F>
  double total = 0.0;
  bool riesz_from_table = false;

  nlohmann::json to_json() const;
};

using OperatorPtr = std::shared_ptr<const ConvolutionOperator>;

class EnergyModel {
 public:
  /// `kernel` is the G_alpha or log operator; `riesz` is optional and only feeds breakdown().
  EnergyModel(Nonlinearity nl, OperatorPtr kernel, OperatorPtr riesz = nullptr);

  const Nonlinearity& nonlinearity() const noexcept { return nl_; }
  const ConvolutionOperator& kernel() const noexcept { return *kernel_; }
  const OperatorPtr& kernel_ptr() const noexcept { return kernel_; }
  const RadialGrid& grid() const noexcept { return kernel_->grid(); }
  const GridPtr& grid_ptr() const noexcept { return kernel_->grid_ptr(); }
  /// alpha of the G_alpha kernel, 0 for the log kernel.
  double alpha() const noexcept;

  double energy(std::span<const double> u) const;
  double energy(const RadialFunction& u) const { return energy(u.values()); }
  EnergyBreakdown breakdown(std::span<const double> u) const;

  /// Covector d with d . v = I'(u) v for every grid function v.
  std::vector<double> derivative(std::span<const double> u) const;
  /// Weighted-L2 representer g = d / w, i.e. (-Delta_r + 1) u - (K * F(u)) f(u) in weak form.
  RadialFunction gradient(const RadialFunction& u) const;
  /// H1 representer (S + W)^{-1} d.
  std::vector<double> sobolev_gradient(std::span<const double> u) const;
  /// Hessian of the discrete energy.
  Eigen::MatrixXd jacobian(std::span<const double> u) const;

  /// sqrt(d^T (S + W)^{-1} d) / (1 + ||u||): the H1-dual norm of I'(u) with the Cerami weight.
  double residual(std::span<const double> u) const;
  /// sqrt(sum_i w_i g_i^2) / (1 + ||u||).
  double l2_residual(std::span<const double> u) const;
  /// sqrt(sum_i w_i g_i^2) without the weight.
  double equation_residual(std::span<const double> u) const;

 private:
  void check_range(std::span<const double> u) const;
  void nonlocal(std::span<const double> u, std::vector<double>& Fu, std::vector<double>& psi) const;

  Nonlinearity nl_;
  OperatorPtr kernel_;
  OperatorPtr riesz_;
};

/// Weighted-L2 norm of (-Delta_r + 1) u - (ln(1/|.|) * F(u)) f(u).
double log_residual(const RadialFunction& u, const Nonlinearity& nl, const ConvolutionOperator& log_op);
/// I(u) with the log kernel; throws NumericalError if not finite.
double energy_log(const RadialFunction& u, const Nonlinearity& nl, OperatorPtr log_op);

/// Cubic-smoothstep bump: 1 on r <= 1/8, 0 on r >= 1/4.
double bump(double r);
RadialFunction bump_e0(GridPtr grid);

/// min of I over sampled profiles scaled to ||u|| = rho_hat.
struct RingBound {
  double rho_hat = 0.0;
  double eta_hat = 0.0;
  std::size_t samples = 0;
  std::size_t argmin = 0;
};
RingBound mountain_ring(const EnergyModel& model, double rho_hat, unsigned seed = 1, std::size_t random_samples = 24);

/// Psi(t) t^{-2/(1-tau)} nondecreasing for t >= 1, Psi(t) = 1/2 (int F(t e0))^2.
CertResult ar_growth_check(const Nonlinearity& nl, GridPtr grid, std::span<const double> t_mesh);

}  // namespace choquard
