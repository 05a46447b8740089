#pragma once

// Radial discretization of the plane.
//
// A RadialGrid is a strictly increasing node set 0 = r_0 < ... < r_{N-1} = R_max.
// Integrals of radial functions over the disk B_{R_max} are approximated by
//   int g(|x|) dx  ~  sum_i g(r_i) w_i,
// with w_i the trapezoidal weights in the variable s = r^2, so that the rule is
// exact for functions that are piecewise linear in r^2 and sum_i w_i = pi R_max^2.
// Gradients are taken cellwise: on [r_i, r_{i+1}] the slope (u_{i+1}-u_i)/dr is
// integrated against the exact annulus area, which is the P1 finite element
// stiffness in radial coordinates.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace choquard {

struct GridSpec {
  std::size_t n = 2048;
  double r_max = 40.0;
  double grade = 1.05;     // ratio of consecutive core nodes; 1 means uniform
  double core_cut = 0.25;  // geometric refinement below this radius
};

/// Innermost nonzero core node sits at core_cut * kCoreDepth.
inline constexpr double kCoreDepth = 1e-6;

class RadialGrid {
 public:
  explicit RadialGrid(std::vector<double> nodes, double core_cut = 0.0);

  std::size_t size() const noexcept { return nodes_.size(); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  /// Cell coefficients a_i = area(annulus_i) / dr_i^2, i = 0..N-2.
  std::span<const double> stiffness() const noexcept { return stiffness_; }
  double r(std::size_t i) const { return nodes_[i]; }
  double w(std::size_t i) const { return weights_[i]; }
  double r_max() const noexcept { return nodes_.back(); }
  double core_cut() const noexcept { return core_cut_; }
  double min_spacing() const noexcept;
  /// Number of nodes in the half-open interval (lo, hi].
  std::size_t count_in(double lo, double hi) const;
  bool has_node(double r, double rel_tol = 1e-14) const;
  /// FNV-1a over the node bytes; identifies a grid in caches and run summaries.
  std::uint64_t hash() const noexcept { return hash_; }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> stiffness_;
  double core_cut_;
  std::uint64_t hash_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr make_grid(const GridSpec& spec);
GridPtr make_grid(std::size_t n, double r_max, double grade = 1.0, double core_cut = 0.25);
/// Copy of `grid` with the given radii inserted as nodes (duplicates skipped).
GridPtr with_nodes(const RadialGrid& grid, std::span<const double> extra);

class RadialFunction {
 public:
  RadialFunction(GridPtr grid, std::vector<double> samples);
  static RadialFunction zeros(GridPtr grid);
  static RadialFunction sample(GridPtr grid, const std::function<double(double)>& fn);

  const RadialGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double max() const;
  double min() const;

  RadialFunction operator*(double s) const;
  RadialFunction operator+(const RadialFunction& other) const;
  RadialFunction operator-(const RadialFunction& other) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

bool same_grid(const RadialGrid& a, const RadialGrid& b) noexcept;
void require_same_grid(const RadialGrid& a, const RadialGrid& b);

double integrate(const RadialFunction& g);
double integrate(const RadialGrid& grid, std::span<const double> g);
double l2_norm(const RadialFunction& u);
double lp_norm(const RadialFunction& u, double p);
/// int |grad u|^2 dx, cellwise.
double gradient_norm_sq(const RadialGrid& grid, std::span<const double> u);
double h1_norm_sq(const RadialGrid& grid, std::span<const double> u);
double h1_norm(const RadialFunction& u);
double h1_inner(const RadialFunction& u, const RadialFunction& v);
double h1_inner(const RadialGrid& grid, std::span<const double> u, std::span<const double> v);

/// (S + W) u, the matrix of the H^1 inner product (tridiagonal).
std::vector<double> h1_matrix_apply(const RadialGrid& grid, std::span<const double> u);
/// Solves (S + W) x = rhs; this is the H^1 Riesz map of a discrete covector.
std::vector<double> h1_matrix_solve(const RadialGrid& grid, std::span<const double> rhs);

/// Piecewise-linear interpolation onto g2, extended by zero beyond the old R_max.
RadialFunction resample(const RadialFunction& u, GridPtr g2);

/// Two-column `r,u` CSV with a header line, 17 significant digits.
void write_csv(const RadialFunction& u, const std::filesystem::path& path);
RadialFunction read_csv(const std::filesystem::path& path, double core_cut = 0.0);

}  // namespace choquard
