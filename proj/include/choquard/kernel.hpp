#pragma once

// Kernels |x|^{-alpha}, G_alpha = (|x|^{-alpha} - 1) / alpha and ln(1/|x|), their circle
// averages, and dense radial convolution tables.
//
// For radial g the planar convolution reduces to
//   (K * g)(r) = int_0^inf g(s) A_K(r, s) 2 pi s ds,
//   A_K(r, s) = (1/2pi) int_0^{2pi} K(sqrt(r^2 + s^2 - 2 r s cos th)) dth,
// and on a grid (K * g)(r_i) ~ sum_j A_K(r_i, r_j) w_j g_j.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "choquard/grid.hpp"
#include "choquard/report.hpp"

namespace choquard {

enum class KernelKind { riesz, galpha, log };

std::string to_string(KernelKind k);

struct KernelSpec {
  KernelKind kind = KernelKind::galpha;
  double alpha = 0.5;  // ignored for log

  static KernelSpec riesz(double alpha) { return {KernelKind::riesz, alpha}; }
  static KernelSpec galpha(double alpha) { return {KernelKind::galpha, alpha}; }
  static KernelSpec log() { return {KernelKind::log, 0.0}; }
  void validate() const;
};

/// (s^{-alpha} - 1) / alpha.
double g_alpha(double s, double alpha);
/// Pointwise kernel value K(d), d > 0.
double kernel_value(const KernelSpec& spec, double d);

/// Circle average A_K(r, s) from the hypergeometric closed form (log: -ln max(r, s)).
double angular_avg(const KernelSpec& spec, double r, double s);
/// Same average by tanh-sinh quadrature over the angle.
double angular_avg_quadrature(const KernelSpec& spec, double r, double s);

/// 2F1(a, a; 1; z) - 1 for a = alpha/2, z in [0, 1], without cancellation.
double hyp_riesz_minus_one(double alpha, double z);

/// Sup of G_alpha(s) s^beta on the mesh, and violations of G_alpha(s) >= ln(1/s) on (0, 1].
CertResult g_alpha_bounds(double alpha, double beta, std::span<const double> s_mesh);

/// sup over a log mesh of [s_lo, s_hi] of |G_alpha(s) + ln s| per alpha; passes when the sups
/// strictly decrease along `alphas` and the last one is <= tol.
CertResult kernel_limit_check(std::span<const double> alphas, double tol = 0.01, double s_lo = 0.05,
                              double s_hi = 20.0, std::size_t points = 4001);

struct OperatorOptions {
  std::filesystem::path cache_dir;  // empty disables caching
  unsigned workers = 1;
  std::size_t memory_limit = std::size_t{2} << 30;
};

class ConvolutionOperator {
 public:
  ConvolutionOperator(GridPtr grid, KernelSpec spec, Eigen::MatrixXd averages);

  const RadialGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const KernelSpec& spec() const noexcept { return spec_; }
  /// Symmetric table A_K(r_i, r_j).
  const Eigen::MatrixXd& averages() const noexcept { return avg_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(avg_.rows()); }

  /// (K * g)(r_i) = sum_j A_ij w_j g_j.
  std::vector<double> apply(std::span<const double> g) const;
  RadialFunction apply(const RadialFunction& g) const;
  /// sum_ij g_i w_i A_ij w_j h_j = int int g(x) K(x - y) h(y).
  double bilinear(std::span<const double> g, std::span<const double> h) const;

 private:
  GridPtr grid_;
  KernelSpec spec_;
  Eigen::MatrixXd avg_;
};

/// Assembles the table; the closed form is used after it agrees with quadrature on probe pairs.
ConvolutionOperator build_operator(GridPtr grid, const KernelSpec& spec, const OperatorOptions& opts = {});

/// Cache file name for (grid, spec).
std::filesystem::path operator_cache_path(const std::filesystem::path& dir, const RadialGrid& grid,
                                          const KernelSpec& spec);

/// Sharp HLS constant in the plane for exponents p = r = 4 / (4 - alpha).
double hls_sharp_constant(double alpha);

}  // namespace choquard
