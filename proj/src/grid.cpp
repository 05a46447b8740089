#include "choquard/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "choquard/errors.hpp"

namespace choquard {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t fnv1a(std::span<const double> values) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  };
  for (double v : values) mix(v);
  return h;
}

}  // namespace

RadialGrid::RadialGrid(std::vector<double> nodes, double core_cut)
    : nodes_(std::move(nodes)), core_cut_(core_cut) {
  const std::size_t n = nodes_.size();
  if (n < 3) throw ConfigError("radial grid needs at least 3 nodes");
  if (nodes_.front() != 0.0) throw ConfigError("radial grid must start at r = 0");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(nodes_[i] > nodes_[i - 1]) || !std::isfinite(nodes_[i]))
      throw ConfigError("radial grid nodes must be finite and strictly increasing");
  }

  weights_.resize(n);
  // trapezoid in s = r^2; differences of squares are factored to avoid cancellation
  auto sq_diff = [](double hi, double lo) { return (hi - lo) * (hi + lo); };
  weights_[0] = 0.5 * kPi * nodes_[1] * nodes_[1];
  for (std::size_t i = 1; i + 1 < n; ++i)
    weights_[i] = 0.5 * kPi * sq_diff(nodes_[i + 1], nodes_[i - 1]);
  weights_[n - 1] = 0.5 * kPi * sq_diff(nodes_[n - 1], nodes_[n - 2]);

  stiffness_.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    stiffness_[i] = kPi * (nodes_[i + 1] + nodes_[i]) / (nodes_[i + 1] - nodes_[i]);

  hash_ = fnv1a(nodes_);
}

double RadialGrid::min_spacing() const noexcept {
  double m = nodes_[1] - nodes_[0];
  for (std::size_t i = 2; i < nodes_.size(); ++i) m = std::min(m, nodes_[i] - nodes_[i - 1]);
  return m;
}

std::size_t RadialGrid::count_in(double lo, double hi) const {
  auto first = std::upper_bound(nodes_.begin(), nodes_.end(), lo);
  auto last = std::upper_bound(nodes_.begin(), nodes_.end(), hi);
  return static_cast<std::size_t>(std::distance(first, last));
}

bool RadialGrid::has_node(double r, double rel_tol) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), r * (1.0 - rel_tol));
  return it != nodes_.end() && std::abs(*it - r) <= rel_tol * std::max(1.0, std::abs(r));
}

GridPtr make_grid(const GridSpec& spec) {
  if (spec.n < 3) throw ConfigError("grid.n must be at least 3");
  if (!(spec.r_max > 0.0) || !std::isfinite(spec.r_max)) throw ConfigError("grid.rmax must be positive");
  if (!(spec.grade >= 1.0) || !std::isfinite(spec.grade)) throw ConfigError("grid.grade must be >= 1");

  std::vector<double> nodes;
  nodes.reserve(spec.n);
  if (spec.grade == 1.0) {
    const double h = spec.r_max / static_cast<double>(spec.n - 1);
    for (std::size_t i = 0; i < spec.n; ++i) nodes.push_back(h * static_cast<double>(i));
    nodes.back() = spec.r_max;
    return std::make_shared<RadialGrid>(std::move(nodes), 0.0);
  }

  const double c = spec.core_cut;
  if (!(c > 0.0) || !(c < spec.r_max)) throw ConfigError("grid.core_cut must lie in (0, grid.rmax)");
  const auto core = static_cast<std::size_t>(std::ceil(std::log(1.0 / kCoreDepth) / std::log(spec.grade)));
  if (spec.n < core + 3)
    throw ConfigError("grid.n = " + std::to_string(spec.n) + " is too small for grade " +
                      std::to_string(spec.grade) + " (core alone needs " + std::to_string(core + 3) + " nodes)");
  const std::size_t uniform_cells = spec.n - core - 2;

  nodes.push_back(0.0);
  for (std::size_t k = core; k >= 1; --k) nodes.push_back(c * std::pow(spec.grade, -static_cast<double>(k)));
  const double h = (spec.r_max - c) / static_cast<double>(uniform_cells);
  for (std::size_t j = 0; j <= uniform_cells; ++j) nodes.push_back(c + h * static_cast<double>(j));
  nodes.back() = spec.r_max;
  return std::make_shared<RadialGrid>(std::move(nodes), c);
}

GridPtr make_grid(std::size_t n, double r_max, double grade, double core_cut) {
  return make_grid(GridSpec{n, r_max, grade, core_cut});
}

GridPtr with_nodes(const RadialGrid& grid, std::span<const double> extra) {
  std::vector<double> nodes(grid.nodes().begin(), grid.nodes().end());
  for (double r : extra) {
    if (!(r > 0.0) || r >= grid.r_max() || grid.has_node(r)) continue;
    nodes.push_back(r);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return std::make_shared<RadialGrid>(std::move(nodes), grid.core_cut());
}

// ---------------------------------------------------------------------------

RadialFunction::RadialFunction(GridPtr grid, std::vector<double> samples)
    : grid_(std::move(grid)), values_(std::move(samples)) {
  if (!grid_) throw ConfigError("radial function without grid");
  if (values_.size() != grid_->size()) throw GridMismatch("sample count does not match grid size");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw NumericalError("non-finite sample at r = " + std::to_string(grid_->r(i)));
  }
}

RadialFunction RadialFunction::zeros(GridPtr grid) {
  const std::size_t n = grid->size();
  return RadialFunction(std::move(grid), std::vector<double>(n, 0.0));
}

RadialFunction RadialFunction::sample(GridPtr grid, const std::function<double(double)>& fn) {
  std::vector<double> v(grid->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid->r(i));
  return RadialFunction(std::move(grid), std::move(v));
}

double RadialFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }
double RadialFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }

RadialFunction RadialFunction::operator*(double s) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= s;
  return RadialFunction(grid_, std::move(v));
}

RadialFunction RadialFunction::operator+(const RadialFunction& other) const {
  require_same_grid(*grid_, other.grid());
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += other[i];
  return RadialFunction(grid_, std::move(v));
}

RadialFunction RadialFunction::operator-(const RadialFunction& other) const {
  require_same_grid(*grid_, other.grid());
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= other[i];
  return RadialFunction(grid_, std::move(v));
}

bool same_grid(const RadialGrid& a, const RadialGrid& b) noexcept {
  return &a == &b || (a.size() == b.size() && a.hash() == b.hash());
}

void require_same_grid(const RadialGrid& a, const RadialGrid& b) {
  if (!same_grid(a, b)) throw GridMismatch();
}

// ---------------------------------------------------------------------------

double integrate(const RadialGrid& grid, std::span<const double> g) {
  if (g.size() != grid.size()) throw GridMismatch("sample count does not match grid size");
  double s = 0.0;
  const auto w = grid.weights();
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * w[i];
  return s;
}

double integrate(const RadialFunction& g) { return integrate(g.grid(), g.values()); }

double l2_norm(const RadialFunction& u) {
  const auto w = u.grid().weights();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * u[i] * w[i];
  return std::sqrt(s);
}

double lp_norm(const RadialFunction& u, double p) {
  if (!(p >= 1.0)) throw ConfigError("lp_norm needs p >= 1");
  const auto w = u.grid().weights();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += std::pow(std::abs(u[i]), p) * w[i];
  return std::pow(s, 1.0 / p);
}

double gradient_norm_sq(const RadialGrid& grid, std::span<const double> u) {
  if (u.size() != grid.size()) throw GridMismatch("sample count does not match grid size");
  const auto a = grid.stiffness();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    const double d = u[i + 1] - u[i];
    s += a[i] * d * d;
  }
  return s;
}

double h1_inner(const RadialGrid& grid, std::span<const double> u, std::span<const double> v) {
  if (u.size() != grid.size() || v.size() != grid.size()) throw GridMismatch("sample count does not match grid size");
  const auto a = grid.stiffness();
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) s += a[i] * (u[i + 1] - u[i]) * (v[i + 1] - v[i]);
  for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * u[i] * v[i];
  return s;
}

double h1_norm_sq(const RadialGrid& grid, std::span<const double> u) { return h1_inner(grid, u, u); }

double h1_norm(const RadialFunction& u) { return std::sqrt(h1_norm_sq(u.grid(), u.values())); }

double h1_inner(const RadialFunction& u, const RadialFunction& v) {
  require_same_grid(u.grid(), v.grid());
  return h1_inner(u.grid(), u.values(), v.values());
}

std::vector<double> h1_matrix_apply(const RadialGrid& grid, std::span<const double> u) {
  const std::size_t n = grid.size();
  if (u.size() != n) throw GridMismatch("sample count does not match grid size");
  const auto a = grid.stiffness();
  const auto w = grid.weights();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = w[i] * u[i];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double flux = a[i] * (u[i] - u[i + 1]);
    out[i] += flux;
    out[i + 1] -= flux;
  }
  return out;
}

std::vector<double> h1_matrix_solve(const RadialGrid& grid, std::span<const double> rhs) {
  // Thomas algorithm; the matrix is symmetric, diagonally dominant, tridiagonal.
  const std::size_t n = grid.size();
  if (rhs.size() != n) throw GridMismatch("sample count does not match grid size");
  const auto a = grid.stiffness();
  const auto w = grid.weights();
  std::vector<double> diag(n), upper(n, 0.0), x(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = w[i] + (i > 0 ? a[i - 1] : 0.0) + (i + 1 < n ? a[i] : 0.0);
    if (i + 1 < n) upper[i] = -a[i];
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double m = upper[i - 1] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    x[i] -= m * x[i - 1];
  }
  x[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (x[i] - upper[i] * x[i + 1]) / diag[i];
  return x;
}

RadialFunction resample(const RadialFunction& u, GridPtr g2) {
  const auto src = u.grid().nodes();
  const auto vals = u.values();
  std::vector<double> out(g2->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = g2->r(i);
    if (r > src.back()) {
      out[i] = 0.0;
      continue;
    }
    auto it = std::lower_bound(src.begin(), src.end(), r);
    const auto j = static_cast<std::size_t>(std::distance(src.begin(), it));
    if (j < src.size() && src[j] == r) {
      out[i] = vals[j];
      continue;
    }
    const double t = (r - src[j - 1]) / (src[j] - src[j - 1]);
    out[i] = vals[j - 1] + t * (vals[j] - vals[j - 1]);
  }
  return RadialFunction(std::move(g2), std::move(out));
}

void write_csv(const RadialFunction& u, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << "r,u\n";
  char buf[64];
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", u.grid().r(i), u[i]);
    os << buf;
  }
}

RadialFunction read_csv(const std::filesystem::path& path, double core_cut) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  std::string line;
  std::getline(is, line);
  if (line != "r,u") throw ConfigError(path.string() + ": expected header 'r,u'");
  std::vector<double> r, u;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError(path.string() + ": malformed line '" + line + "'");
    r.push_back(std::stod(line.substr(0, comma)));
    u.push_back(std::stod(line.substr(comma + 1)));
  }
  auto grid = std::make_shared<RadialGrid>(std::move(r), core_cut);
  return RadialFunction(std::move(grid), std::move(u));
}

}  // namespace choquard
