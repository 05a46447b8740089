#include "choquard/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "choquard/errors.hpp"

namespace choquard {

nlohmann::json EnergyBreakdown::to_json() const {
  return {{"quadratic", quadratic}, {"mass", mass},   {"riesz", riesz},
          {"galpha", galpha},       {"total", total}, {"riesz_from_table", riesz_from_table}};
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Evaluates F (or f) on every sample and reattaches the radius to a range failure.
template <class Fn>
std::vector<double> pointwise(const RadialGrid& grid, std::span<const double> u, Fn&& fn) {
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    try {
      out[i] = fn(u[i]);
    } catch (const RangeError& e) {
      std::ostringstream msg;
      msg << e.what() << " (at r = " << grid.r(i) << ")";
      throw RangeError(msg.str(), e.at());
    }
  }
  return out;
}

double weighted_l2(const RadialGrid& grid, std::span<const double> d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += d[i] * d[i] / grid.w(i);
  return std::sqrt(s);
}

}  // namespace

EnergyModel::EnergyModel(Nonlinearity nl, OperatorPtr kernel, OperatorPtr riesz)
    : nl_(std::move(nl)), kernel_(std::move(kernel)), riesz_(std::move(riesz)) {
  if (!kernel_) throw ConfigError("energy model needs a kernel operator");
  if (kernel_->spec().kind == KernelKind::riesz)
    throw ConfigError("energy model kernel must be G_alpha or log; the Riesz table only enters the breakdown");
  if (riesz_) {
    if (riesz_->spec().kind != KernelKind::riesz || kernel_->spec().kind != KernelKind::galpha ||
        riesz_->spec().alpha != kernel_->spec().alpha)
      throw ConfigError("riesz operator must match the G_alpha exponent");
    require_same_grid(riesz_->grid(), kernel_->grid());
  }
}

double EnergyModel::alpha() const noexcept {
  return kernel_->spec().kind == KernelKind::galpha ? kernel_->spec().alpha : 0.0;
}

void EnergyModel::check_range(std::span<const double> u) const {
  if (u.size() != grid().size()) throw GridMismatch("sample count does not match the operator grid");
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!std::isfinite(u[i])) throw NumericalError("non-finite sample at r = " + std::to_string(grid().r(i)));
}

void EnergyModel::nonlocal(std::span<const double> u, std::vector<double>& Fu, std::vector<double>& psi) const {
  check_range(u);
  Fu = pointwise(grid(), u, [this](double t) { return nl_.F(t); });
  psi = kernel_->apply(Fu);
}

double EnergyModel::energy(std::span<const double> u) const {
  std::vector<double> Fu, psi;
  nonlocal(u, Fu, psi);
  const auto& g = grid();
  double nl_term = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) nl_term += Fu[i] * g.w(i) * psi[i];
  return 0.5 * h1_norm_sq(g, u) - 0.5 * nl_term;
}

EnergyBreakdown EnergyModel::breakdown(std::span<const double> u) const {
  std::vector<double> Fu, psi;
  nonlocal(u, Fu, psi);
  const auto& g = grid();
  EnergyBreakdown b;
  b.quadratic = 0.5 * h1_norm_sq(g, u);
  double pair = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) pair += Fu[i] * g.w(i) * psi[i];
  b.galpha = 0.5 * pair;
  b.total = b.quadratic - b.galpha;
  const double a = alpha();
  if (a > 0.0) {
    const double mass = integrate(g, Fu);
    b.mass = 0.5 / a * mass * mass;
    if (riesz_) {
      b.riesz = 0.5 / a * riesz_->bilinear(Fu, Fu);
      b.riesz_from_table = true;
    } else {
      b.riesz = b.mass + b.galpha;
    }
  }
  return b;
}

std::vector<double> EnergyModel::derivative(std::span<const double> u) const {
  std::vector<double> Fu, psi;
  nonlocal(u, Fu, psi);
  const auto& g = grid();
  auto fu = pointwise(g, u, [this](double t) { return nl_.f(t); });
  auto d = h1_matrix_apply(g, u);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= g.w(i) * fu[i] * psi[i];
  return d;
}

RadialFunction EnergyModel::gradient(const RadialFunction& u) const {
  require_same_grid(u.grid(), grid());
  auto d = derivative(u.values());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] /= grid().w(i);
  return RadialFunction(grid_ptr(), std::move(d));
}

std::vector<double> EnergyModel::sobolev_gradient(std::span<const double> u) const {
  return h1_matrix_solve(grid(), derivative(u));
}

Eigen::MatrixXd EnergyModel::jacobian(std::span<const double> u) const {
  std::vector<double> Fu, psi;
  nonlocal(u, Fu, psi);
  const auto& g = grid();
  const auto n = static_cast<Eigen::Index>(u.size());
  auto fu = pointwise(g, u, [this](double t) { return nl_.f(t); });
  auto fpu = pointwise(g, u, [this](double t) { return nl_.fprime(t); });

  Eigen::VectorXd wf(n);
  for (Eigen::Index i = 0; i < n; ++i) wf[i] = g.w(i) * fu[i];
  Eigen::MatrixXd J = -(wf.asDiagonal() * kernel_->averages() * wf.asDiagonal());
  const auto a = g.stiffness();
  for (Eigen::Index i = 0; i < n; ++i) J(i, i) += g.w(i) * (1.0 - fpu[i] * psi[i]);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    J(i, i) += a[i];
    J(i + 1, i + 1) += a[i];
    J(i, i + 1) -= a[i];
    J(i + 1, i) -= a[i];
  }
  return J;
}

double EnergyModel::residual(std::span<const double> u) const {
  const auto d = derivative(u);
  const auto x = h1_matrix_solve(grid(), d);
  return std::sqrt(std::max(0.0, dot(d, x))) / (1.0 + std::sqrt(h1_norm_sq(grid(), u)));
}

double EnergyModel::l2_residual(std::span<const double> u) const {
  return equation_residual(u) / (1.0 + std::sqrt(h1_norm_sq(grid(), u)));
}

double EnergyModel::equation_residual(std::span<const double> u) const {
  return weighted_l2(grid(), derivative(u));
}

double log_residual(const RadialFunction& u, const Nonlinearity& nl, const ConvolutionOperator& log_op) {
  if (log_op.spec().kind != KernelKind::log) throw ConfigError("log_residual needs the logarithmic operator");
  require_same_grid(u.grid(), log_op.grid());
  const auto& g = u.grid();
  auto Fu = pointwise(g, u.values(), [&nl](double t) { return nl.F(t); });
  auto fu = pointwise(g, u.values(), [&nl](double t) { return nl.f(t); });
  auto psi = log_op.apply(Fu);
  auto d = h1_matrix_apply(g, u.values());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= g.w(i) * fu[i] * psi[i];
  return weighted_l2(g, d);
}

double energy_log(const RadialFunction& u, const Nonlinearity& nl, OperatorPtr log_op) {
  if (!log_op || log_op->spec().kind != KernelKind::log) throw ConfigError("energy_log needs the logarithmic operator");
  require_same_grid(u.grid(), log_op->grid());
  EnergyModel model(nl, std::move(log_op));
  const double e = model.energy(u.values());
  if (!std::isfinite(e)) throw NumericalError("logarithmic energy is not finite");
  return e;
}

double bump(double r) {
  if (r <= 0.125) return 1.0;
  if (r >= 0.25) return 0.0;
  const double x = (0.25 - r) / 0.125;
  return x * x * (3.0 - 2.0 * x);
}

RadialFunction bump_e0(GridPtr grid) { return RadialFunction::sample(std::move(grid), bump); }

RingBound mountain_ring(const EnergyModel& model, double rho_hat, unsigned seed, std::size_t random_samples) {
  if (!(rho_hat > 0.0)) throw ConfigError("ring radius must be positive");
  const auto& gp = model.grid_ptr();
  std::vector<RadialFunction> profiles;
  for (double width : {0.25, 0.5, 1.0, 2.0, 4.0})
    profiles.push_back(RadialFunction::sample(gp, [width](double r) { return std::exp(-r * r / (width * width)); }));
  for (double scale : {0.5, 1.0, 4.0, 16.0})
    profiles.push_back(RadialFunction::sample(gp, [scale](double r) { return bump(r / scale); }));
  profiles.push_back(RadialFunction::sample(gp, [](double r) { return std::exp(-r); }));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> width(0.1, 5.0), weight(0.0, 1.0);
  for (std::size_t k = 0; k < random_samples; ++k) {
    const double w1 = width(rng), w2 = width(rng), c1 = weight(rng), c2 = weight(rng);
    profiles.push_back(RadialFunction::sample(gp, [=](double r) {
      return c1 * std::exp(-r * r / (w1 * w1)) + c2 * std::exp(-r / w2) + 1e-3;
    }));
  }

  RingBound out;
  out.rho_hat = rho_hat;
  out.eta_hat = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    const auto& p = profiles[k];
    const double scale = rho_hat / h1_norm(p);
    const double e = model.energy((p * scale).values());
    if (e < out.eta_hat) {
      out.eta_hat = e;
      out.argmin = k;
    }
  }
  out.samples = profiles.size();
  return out;
}

CertResult ar_growth_check(const Nonlinearity& nl, GridPtr grid, std::span<const double> t_mesh) {
  CertResult res;
  res.name = "ar_growth";
  const auto e0 = bump_e0(grid);
  const double expo = 2.0 / (1.0 - nl.tau());
  double prev = 0.0;
  double worst = 0.0, worst_at = 0.0;
  std::size_t used = 0;
  for (double t : t_mesh) {
    if (t < 1.0 || t > nl.domain_max()) continue;
    const auto Fu = pointwise(*grid, e0.values(), [&](double v) { return nl.F(t * v); });
    const double mass = integrate(*grid, Fu);
    // compare in logs; Psi overflows quickly for the exponential families
    const double lv = std::log(0.5) + 2.0 * std::log(mass) - expo * std::log(t);
    if (used > 0) {
      const double drop = prev - lv;
      if (drop > worst) {
        worst = drop;
        worst_at = t;
      }
    }
    prev = lv;
    ++used;
  }
  if (used < 2) throw ConfigError("AR surrogate needs at least two mesh points in [1, domain_max]");
  res.pass = worst <= 1e-12;
  res.value = worst;
  res.detail = res.pass ? "Psi(t) t^{-2/(1-tau)} nondecreasing on the mesh"
                        : "Psi(t) t^{-2/(1-tau)} decreases near t = " + std::to_string(worst_at);
  res.data = {{"exponent", expo}, {"mesh_points", used}, {"max_log_drop", worst}, {"worst_at", worst_at}};
  return res;
}

}  // namespace choquard
