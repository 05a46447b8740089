#include "choquard/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "choquard/errors.hpp"

namespace choquard {

namespace {

constexpr double kPi = std::numbers::pi;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

void MoserConfig::validate() const {
  if (n < 2) throw ConfigError("moser.n must be an integer >= 2");
  if (!(rho > 0.0 && rho < 0.25)) throw ConfigError("moser.rho must lie in (0, 1/4)");
}

double moser_delta(int n) {
  const double L = std::log(static_cast<double>(n)), n2 = static_cast<double>(n) * n;
  return 1.0 / (4.0 * L) - 1.0 / (4.0 * n2 * L) - 1.0 / (2.0 * n2);
}

double moser_norm_closed(const MoserConfig& cfg) {
  cfg.validate();
  return 1.0 + cfg.rho * cfg.rho * moser_delta(cfg.n);
}

double moser_value(const MoserConfig& cfg, double r) {
  const double L = std::log(static_cast<double>(cfg.n));
  const double c = 1.0 / std::sqrt(2.0 * kPi);
  if (r <= cfg.rho / cfg.n) return c * std::sqrt(L);
  if (r >= cfg.rho) return 0.0;
  return c * std::log(cfg.rho / r) / std::sqrt(L);
}

GridPtr moser_grid(const RadialGrid& base, const MoserConfig& cfg) {
  cfg.validate();
  const double kinks[] = {cfg.rho / cfg.n, cfg.rho};
  return with_nodes(base, kinks);
}

RadialFunction moser_w(const MoserConfig& cfg, GridPtr grid) {
  cfg.validate();
  const double inner = cfg.rho / cfg.n;
  if (!grid->has_node(inner) || !grid->has_node(cfg.rho))
    throw ConfigError("grid has no nodes at the Moser kinks rho/n and rho");
  if (grid->count_in(0.0, inner) < 4) throw ConfigError("grid does not resolve B_{rho/n}");
  return RadialFunction::sample(std::move(grid), [&cfg](double r) { return moser_value(cfg, r); });
}

double t_n_squared(const MoserConfig& cfg) {
  const double L = std::log(static_cast<double>(cfg.n));
  return 1.0 + (std::log1p(cfg.rho * cfg.rho * moser_delta(cfg.n)) - std::log(4.0)) / (4.0 * L);
}

double psi_n(const MoserConfig& cfg, double t) {
  const double L = std::log(static_cast<double>(cfg.n));
  const double norm = 1.0 + moser_delta(cfg.n) * cfg.rho * cfg.rho;
  return 0.5 * norm * t * t - std::exp(4.0 * (t * t - 1.0) * L) / (2.0 * L);
}

double g_case2(double n, double t) {
  const double L = std::log(n);
  return std::exp(4.0 * (t * t - 1.0) * L) / (std::pow(t, 4) * L);
}

int case2_n0(std::span<const double> t_mesh, int n_max) {
  for (int n = 2; n <= n_max; ++n) {
    bool ok = true;
    for (double t : t_mesh) {
      if (t < std::sqrt(2.0)) continue;
      if (g_case2(n, t) < 1.0) {
        ok = false;
        break;
      }
    }
    if (ok) return n;
  }
  return 0;
}

int psi_threshold_n(double rho, int n_max) {
  int candidate = 0;
  for (int n = n_max; n >= 2; --n) {
    const MoserConfig cfg{n, rho};
    const double t2 = t_n_squared(cfg);
    const double t = std::sqrt(std::max(t2, 0.0));
    const bool ok = t2 >= 0.5 && t2 <= 2.0 && psi_n(cfg, t) < 0.5;
    if (!ok) break;
    candidate = n;
  }
  return candidate;
}

nlohmann::json LevelCertificate::to_json() const {
  nlohmann::json psi_json = nlohmann::json::array();
  for (double p : psi) psi_json.push_back(finite_or_null(p));
  return {{"n", cfg.n},
          {"rho", cfg.rho},
          {"alpha", alpha},
          {"t_mesh", t_mesh},
          {"levels", levels},
          {"psi", psi_json},
          {"max_level", max_level},
          {"argmax_t", argmax_t},
          {"t_negative", t_negative},
          {"case_boundaries", {case1_end, case3_end}},
          {"t_n", t_n},
          {"psi_at_t_n", psi_at_t_n},
          {"n_min", n_min},
          {"epsilon", epsilon},
          {"t_epsilon", t_epsilon},
          {"log_bound_violation", log_bound_violation},
          {"ln2_bound_violation", ln2_bound_violation},
          {"majorant_points", majorant_points},
          {"majorant_applicable", majorant_applicable},
          {"majorant_violation", majorant_violation},
          {"verdict_a", verdict_a},
          {"verdict_b", verdict_b},
          {"verdict_c", verdict_c},
          {"pass", pass()}};
}

std::vector<double> level_t_mesh(const MoserConfig& cfg, const EnergyModel& model, double dt) {
  const auto w = moser_w(cfg, model.grid_ptr());
  const double top = moser_value(cfg, 0.0);
  const double t_max = model.nonlinearity().domain_max() / top;
  std::vector<double> mesh;
  double best = 0.0;
  for (int k = 0;; ++k) {
    const double t = dt * k;
    if (t > t_max) break;
    mesh.push_back(t);
    const double e = model.energy(w * t);
    best = std::max(best, e);
    if (e < 0.0 && best > 0.0) break;
  }
  return mesh;
}

namespace {

// Smallest t with s F(s) >= (beta - eps) e^{4 pi s^2} for every mesh s >= t up to the domain.
double t_epsilon_of(const Nonlinearity& nl, double beta_minus_eps) {
  const double hi = std::min(nl.domain_max(), 50.0);
  const int steps = 20000;
  double t_eps = hi;
  for (int k = steps; k >= 1; --k) {
    const double t = hi * k / steps;
    const double lhs = std::log(t) + std::log(std::max(nl.F(t), std::numeric_limits<double>::min()));
    const double rhs = std::log(beta_minus_eps) + 4.0 * kPi * t * t;
    if (lhs < rhs) break;
    t_eps = t;
  }
  return t_eps;
}

}  // namespace

LevelCertificate level_certificate(const MoserConfig& cfg, const EnergyModel& model, const ConvolutionOperator& log_op,
                                   std::span<const double> t_mesh) {
  cfg.validate();
  if (model.kernel().spec().kind != KernelKind::galpha) throw ConfigError("level certificate needs the G_alpha energy");
  if (log_op.spec().kind != KernelKind::log) throw ConfigError("level certificate needs the logarithmic operator");
  require_same_grid(log_op.grid(), model.grid());
  const auto& nl = model.nonlinearity();
  const double threshold = fm_threshold(cfg.rho);
  if (!(nl.beta() > threshold))
    throw ConfigError("declared beta " + std::to_string(nl.beta()) + " does not exceed the threshold " +
                      std::to_string(threshold));
  if (t_mesh.empty()) throw ConfigError("level certificate needs a nonempty t mesh");

  LevelCertificate cert;
  cert.cfg = cfg;
  cert.alpha = model.alpha();
  cert.t_mesh.assign(t_mesh.begin(), t_mesh.end());
  cert.case1_end = std::sqrt(0.5);
  cert.case3_end = std::sqrt(2.0);
  cert.epsilon = 0.5 * (nl.beta() - threshold);
  cert.t_epsilon = t_epsilon_of(nl, nl.beta() - cert.epsilon);
  cert.t_n = std::sqrt(t_n_squared(cfg));
  cert.psi_at_t_n = psi_n(cfg, cert.t_n);
  cert.n_min = psi_threshold_n(cfg.rho);

  const auto w = moser_w(cfg, model.grid_ptr());
  const auto& g = model.grid();
  const double norm_sq = h1_norm_sq(g, w.values());
  const double w0 = moser_value(cfg, 0.0);
  cert.max_level = -std::numeric_limits<double>::infinity();
  bool seen_positive = false;
  for (double t : t_mesh) {
    const auto u = w * t;
    const double level = model.energy(u);
    cert.levels.push_back(level);
    if (level > cert.max_level) {
      cert.max_level = level;
      cert.argmax_t = t;
    }
    if (level > 0.0) seen_positive = true;
    if (seen_positive && level < 0.0 && cert.t_negative == 0.0) cert.t_negative = t;

    std::vector<double> Fu(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) Fu[i] = nl.F(u[i]);
    const double log_term = 0.5 * log_op.bilinear(Fu, Fu);
    const double mass = integrate(g, Fu);
    const double quad = 0.5 * t * t * norm_sq;
    const double tol = 1e-10 * std::max({1.0, std::abs(quad), std::abs(log_term)});
    cert.log_bound_violation = std::max(cert.log_bound_violation, level - (quad - log_term) - tol);
    cert.ln2_bound_violation = std::max(cert.ln2_bound_violation, 0.5 * std::log(2.0) * mass * mass - log_term - tol);

    const bool middle = t >= cert.case1_end && t <= cert.case3_end;
    cert.psi.push_back(middle ? psi_n(cfg, t) : kNaN);
    if (middle && t * w0 >= cert.t_epsilon) {
      ++cert.majorant_points;
      cert.majorant_violation = std::max(cert.majorant_violation, level - psi_n(cfg, t));
    }
  }
  cert.log_bound_violation = std::max(cert.log_bound_violation, 0.0);
  cert.ln2_bound_violation = std::max(cert.ln2_bound_violation, 0.0);
  cert.majorant_applicable = cert.majorant_points > 0;

  cert.verdict_a = cert.max_level < 0.5;
  const double t2 = cert.t_n * cert.t_n;
  cert.verdict_b = t2 >= 0.5 && t2 <= 2.0 && cert.psi_at_t_n < 0.5 && cert.n_min > 0 && cfg.n >= cert.n_min;
  cert.verdict_c = cert.majorant_violation <= 0.0 && cert.log_bound_violation <= 0.0 && cert.ln2_bound_violation <= 0.0;
  return cert;
}

CertResult radial_bound_check(const RadialFunction& u) {
  const double norm = h1_norm(u);
  if (!(norm > 0.0)) throw ConfigError("radial bound check needs a nonzero function");
  CertResult res;
  res.name = "radial_bound";
  double best = 0.0, at = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = u.grid().r(i);
    if (r < 1.0) continue;
    const double v = std::abs(u[i]) * std::sqrt(r) / norm;
    if (v > best) {
      best = v;
      at = r;
    }
  }
  res.value = best;
  res.pass = std::isfinite(best);
  res.detail = "sup_{r>=1} |u| r^{1/2} / ||u||";
  res.data = {{"argmax_r", at}, {"h1_norm", norm}};
  return res;
}

CertResult DecayFit::to_result() const {
  CertResult res;
  res.name = "decay";
  res.applicable = applicable;
  res.pass = pass;
  res.value = rate;
  res.detail = applicable ? "ln u ~ ln M - rate r on the fit window" : "tail is not positive";
  res.data = {{"M", M}, {"rate", rate}, {"r_lo", r_lo}, {"r_hi", r_hi}, {"max_ratio", max_ratio}};
  return res;
}

DecayFit decay_certificate(const RadialFunction& u, double R_fit) {
  const auto& g = u.grid();
  DecayFit fit;
  fit.r_lo = R_fit;
  fit.r_hi = 0.5 * g.r_max();
  if (!(R_fit >= 0.0 && R_fit < fit.r_hi)) throw ConfigError("decay fit needs 0 <= R_fit < R_max / 2");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = g.r(i);
    if (r < fit.r_lo || r > fit.r_hi) continue;
    if (!(u[i] > 0.0)) return fit;
    xs.push_back(r);
    ys.push_back(std::log(u[i]));
  }
  if (xs.size() < 3) return fit;
  fit.applicable = true;
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.M = std::exp(my - slope * mx);
  for (std::size_t k = 0; k < xs.size(); ++k)
    fit.max_ratio = std::max(fit.max_ratio, std::exp(ys[k]) / (fit.M * std::exp(-0.5 * xs[k])));
  fit.pass = fit.rate >= 0.45 && fit.max_ratio <= 1.05;
  return fit;
}

CertResult hls_certificate(const ConvolutionOperator& riesz_op, std::size_t trials, unsigned seed) {
  if (riesz_op.spec().kind != KernelKind::riesz) throw ConfigError("HLS certificate needs the Riesz operator");
  const double alpha = riesz_op.spec().alpha;
  const double p = 4.0 / (4.0 - alpha);
  const auto& gp = riesz_op.grid_ptr();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> width(0.05, 3.0), centre(0.0, 4.0), coef(0.0, 1.0);
  auto profile = [&]() {
    const double w1 = width(rng), w2 = width(rng), c2 = centre(rng), a1 = coef(rng), a2 = coef(rng);
    return RadialFunction::sample(gp, [=](double r) {
      const double ring = (r - c2) / w2;
      return a1 * std::exp(-r * r / (w1 * w1)) + a2 * std::exp(-ring * ring);
    });
  };
  const double bound = 2.0 * std::sqrt(kPi) * (1.0 + 1e-3);
  CertResult res;
  res.name = "hls";
  double worst = 0.0;
  std::vector<double> quotients;
  for (std::size_t k = 0; k < trials; ++k) {
    const auto g = profile(), h = profile();
    const double denom = lp_norm(g, p) * lp_norm(h, p);
    const double q = denom > 0.0 ? riesz_op.bilinear(g.values(), h.values()) / denom : 0.0;
    quotients.push_back(q);
    worst = std::max(worst, q);
  }
  res.value = worst;
  res.pass = worst <= bound;
  res.detail = "max discrete HLS quotient against 2 sqrt(pi) (1 + 1e-3)";
  res.data = {{"alpha", alpha},  {"p", p},         {"trials", trials},
              {"seed", seed},    {"bound", bound}, {"sharp_constant", hls_sharp_constant(alpha)},
              {"quotients", quotients}};
  return res;
}

CertResult hls_certificate(double alpha, std::size_t trials, unsigned seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("HLS certificate exponent must lie in (0, 1)");
  auto grid = make_grid(1024, 20.0, 1.05, 0.25);
  return hls_certificate(build_operator(grid, KernelSpec::riesz(alpha)), trials, seed);
}

}  // namespace choquard
