#include "choquard/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "choquard/errors.hpp"

namespace choquard {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFourPi = 4.0 * kPi;
constexpr double kE = std::numbers::e;

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::power: return "power";
    case Family::exp_critical: return "exp_critical";
    case Family::paper_example: return "paper_example";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "power") return Family::power;
  if (name == "exp_critical") return Family::exp_critical;
  if (name == "paper_example") return Family::paper_example;
  throw ConfigError("unknown nonlinearity family '" + name + "'");
}

Nonlinearity Nonlinearity::power(double kappa, double q) {
  if (!(kappa > 0.0)) throw ConfigError("nonlinearity.kappa must be positive");
  if (!(q > 2.0)) throw ConfigError("nonlinearity.q must exceed 2");
  Nonlinearity nl;
  nl.family_ = Family::power;
  nl.kappa_ = kappa;
  nl.q_ = q;
  nl.a_ = 0.0;
  nl.tau_ = 0.9 * (q - 1.0) / q;
  nl.C_ = 1.05;
  nl.beta_ = 10.0;
  nl.p_ = q - 1.0;
  nl.domain_max_ = 50.0;
  return nl;
}

Nonlinearity Nonlinearity::exp_critical(double kappa, double a) {
  if (!(kappa > 0.0)) throw ConfigError("nonlinearity.kappa must be positive");
  if (a == 0.0) a = kFourPi;
  if (!(a > 0.0)) throw ConfigError("nonlinearity.a must be positive");
  Nonlinearity nl;
  nl.family_ = Family::exp_critical;
  nl.kappa_ = kappa;
  nl.q_ = 3.0;
  nl.a_ = a;
  nl.tau_ = 0.6;
  nl.C_ = 1.05;
  nl.beta_ = 10.0;
  nl.p_ = 4.0;
  // keeps a t^2 at the value it has for a = 4 pi, t = 7
  nl.domain_max_ = 7.0 * std::sqrt(kFourPi / a);
  return nl;
}

Nonlinearity Nonlinearity::paper_example() {
  Nonlinearity nl;
  nl.family_ = Family::paper_example;
  nl.kappa_ = 1.0;
  nl.q_ = 2.0;
  nl.a_ = kFourPi;
  nl.tau_ = 0.45;
  nl.C_ = 2.5;
  nl.beta_ = 10.0;
  nl.p_ = 3.0;
  nl.domain_max_ = (kE - 1.0) * (1.0 - 1e-6);
  return nl;
}

Nonlinearity Nonlinearity::from_params(const NonlinearityParams& p) {
  Nonlinearity nl = [&] {
    switch (p.family) {
      case Family::power: return power(p.kappa, p.q);
      case Family::exp_critical: return exp_critical(p.kappa, p.a);
      case Family::paper_example: return paper_example();
    }
    throw ConfigError("unknown nonlinearity family");
  }();
  return nl.with_constants(p.tau, p.C, p.beta, p.rho);
}

Nonlinearity Nonlinearity::with_constants(std::optional<double> tau, std::optional<double> C,
                                          std::optional<double> beta,
                                          std::optional<double> rho) const {
  Nonlinearity nl = *this;
  if (tau) {
    if (!(*tau > 0.0 && *tau < 1.0)) throw ConfigError("nonlinearity.tau must lie in (0, 1)");
    nl.tau_ = *tau;
  }
  if (C) {
    if (!(*C > 1.0)) throw ConfigError("nonlinearity.C must exceed 1");
    nl.C_ = *C;
  }
  if (beta) {
    if (!(*beta > 0.0)) throw ConfigError("nonlinearity.beta must be positive");
    nl.beta_ = *beta;
  }
  if (rho) {
    if (!(*rho > 0.0 && *rho < 0.25)) throw ConfigError("nonlinearity.rho must lie in (0, 1/4)");
    nl.rho_ = *rho;
  }
  return nl;
}

void Nonlinearity::check_domain(double t) const {
  if (std::isnan(t)) throw RangeError("nonlinearity evaluated at NaN", t);
  if (t > domain_max_)
    throw RangeError(name() + ": t = " + std::to_string(t) + " exceeds domain_max = " +
                         std::to_string(domain_max_),
                     t);
}

double Nonlinearity::F(double t) const {
  check_domain(t);
  if (t <= 0.0) return 0.0;
  switch (family_) {
    case Family::power: return kappa_ * std::pow(t, q_);
    case Family::exp_critical: return std::exp(std::log(kappa_) + 3.0 * std::log(t) + a_ * t * t);
    case Family::paper_example: {
      const double L = -std::log(std::log1p(t));
      return std::exp(2.0 * std::log(t) + kFourPi * t * t - std::log(L));
    }
  }
  return 0.0;
}

double Nonlinearity::f(double t) const {
  check_domain(t);
  if (t <= 0.0) return 0.0;
  switch (family_) {
    case Family::power: return kappa_ * q_ * std::pow(t, q_ - 1.0);
    case Family::exp_critical: {
      const double x = a_ * t * t;
      return std::exp(std::log(kappa_) + 2.0 * std::log(t) + std::log(3.0 + 2.0 * x) + x);
    }
    case Family::paper_example: {
      const double ell = std::log1p(t);
      const double L = -std::log(ell);
      const double E = std::exp(kFourPi * t * t);
      const double N = t * t * E;
      const double dN = (2.0 * t + 8.0 * kPi * t * t * t) * E;
      const double dL = -1.0 / (ell * (1.0 + t));
      return dN / L - N * dL / (L * L);
    }
  }
  return 0.0;
}

double Nonlinearity::fprime(double t) const {
  check_domain(t);
  if (t <= 0.0) return 0.0;
  switch (family_) {
    case Family::power: return kappa_ * q_ * (q_ - 1.0) * std::pow(t, q_ - 2.0);
    case Family::exp_critical: {
      const double x = a_ * t * t;
      return std::exp(std::log(kappa_) + std::log(t) + std::log(6.0 + 14.0 * x + 4.0 * x * x) + x);
    }
    case Family::paper_example: {
      const double ell = std::log1p(t);
      const double L = -std::log(ell);
      const double E = std::exp(kFourPi * t * t);
      const double t2 = t * t;
      const double N = t2 * E;
      const double dN = (2.0 * t + 8.0 * kPi * t2 * t) * E;
      const double d2N = (2.0 + 40.0 * kPi * t2 + 64.0 * kPi * kPi * t2 * t2) * E;
      const double dL = -1.0 / (ell * (1.0 + t));
      const double d2L = (1.0 + ell) / (ell * ell * (1.0 + t) * (1.0 + t));
      return d2N / L - 2.0 * dN * dL / (L * L) - N * d2L / (L * L) + 2.0 * N * dL * dL / (L * L * L);
    }
  }
  return 0.0;
}

double Nonlinearity::ratio(double t) const {
  check_domain(t);
  if (!(t > 0.0)) throw RangeError("ratio F f'/f^2 is defined for t > 0 only", t);
  switch (family_) {
    case Family::power: return (q_ - 1.0) / q_;
    case Family::exp_critical: {
      const double x = a_ * t * t;
      return (4.0 * x * x + 14.0 * x + 6.0) / ((2.0 * x + 3.0) * (2.0 * x + 3.0));
    }
    case Family::paper_example: {
      const double fv = f(t);
      return F(t) / fv * (fprime(t) / fv);
    }
  }
  return 0.0;
}

double Nonlinearity::quotient(double t) const {
  if (t <= 0.0) return (1.0 - tau_) * t;
  check_domain(t);
  switch (family_) {
    case Family::power: return t / q_;
    case Family::exp_critical: return t / (3.0 + 2.0 * a_ * t * t);
    case Family::paper_example: return F(t) / f(t);
  }
  return 0.0;
}

double Nonlinearity::H(double t) const {
  if (t <= 0.0) return 0.0;
  check_domain(t);
  if (family_ == Family::power) return std::sqrt((q_ - 1.0) / q_) * t;
  auto integrand = [this](double s) { return s > 0.0 ? std::sqrt(ratio(s)) : std::sqrt(ratio(1e-300)); };
  double err = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, t, 15, 1e-13, &err);
  if (!std::isfinite(value) || err > 1e-8 * std::max(1.0, std::abs(value)))
    throw NumericalError("H quadrature did not converge at t = " + std::to_string(t) +
                         " (error estimate " + std::to_string(err) + ")");
  return value;
}

double Nonlinearity::fm_quantity(double t) const {
  check_domain(t);
  if (t <= 0.0) return 0.0;
  switch (family_) {
    case Family::power: return std::exp(std::log(kappa_) + (q_ + 1.0) * std::log(t) - kFourPi * t * t);
    case Family::exp_critical: return std::exp(std::log(kappa_) + 4.0 * std::log(t) + (a_ - kFourPi) * t * t);
    case Family::paper_example: return t * t * t / -std::log(std::log1p(t));
  }
  return 0.0;
}

std::optional<double> Nonlinearity::singularity() const {
  if (family_ == Family::paper_example) return kE - 1.0;
  return std::nullopt;
}

double fm_threshold(double rho) {
  return 1.0 / (rho * rho * std::sqrt(std::log(2.0)) * std::pow(kPi, 1.5));
}

const AssumptionCheck* AssumptionReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

bool AssumptionReport::passes(const std::string& name) const {
  const auto* c = find(name);
  return c != nullptr && c->pass;
}

std::vector<std::string> AssumptionReport::failing() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.pass) out.push_back(c.name);
  return out;
}

nlohmann::json AssumptionReport::to_json() const {
  nlohmann::json j;
  j["family"] = family;
  j["ratio"] = {{"min", ratio_min}, {"min_at", ratio_min_at}, {"max", ratio_max},
                {"max_at", ratio_max_at}, {"terminal", ratio_terminal}};
  j["fm"] = {{"terminal", fm_terminal}, {"threshold", threshold}};
  j["f5"] = {{"M0", f5_M0}, {"t0", f5_t0}};
  j["envelope"] = {{"C", envelope_C}, {"t_bar", envelope_tbar}, {"t_tilde", envelope_ttilde}};
  j["domain_singularity"] = domain_singularity;
  if (domain_singularity) j["singularity_at"] = singularity_at;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"witness", c.witness},
                   {"detail", c.detail}});
  j["checks"] = arr;
  j["failing"] = failing();
  return j;
}

std::vector<double> default_t_mesh(const Nonlinearity& nl, std::size_t count) {
  std::vector<double> mesh(count);
  const double top = nl.domain_max();
  for (std::size_t i = 0; i < count; ++i) mesh[i] = top * static_cast<double>(i + 1) / static_cast<double>(count);
  return mesh;
}

AssumptionReport check_assumptions(const Nonlinearity& nl, std::span<const double> t_mesh) {
  AssumptionReport rep;
  rep.family = nl.name();
  rep.threshold = fm_threshold(nl.rho());

  std::vector<double> mesh;
  for (double t : t_mesh)
    if (t > 0.0 && t <= nl.domain_max()) mesh.push_back(t);
  std::sort(mesh.begin(), mesh.end());
  mesh.erase(std::unique(mesh.begin(), mesh.end()), mesh.end());
  if (mesh.size() < 8) throw ConfigError("assumption audit needs at least 8 mesh points in (0, domain_max]");

  const std::size_t n = mesh.size();
  const std::size_t tail_begin = n - std::max<std::size_t>(n / 10, 2);
  const double t_end = mesh.back();

  // (f1): sign, smallness at 0, critical growth envelope for f
  {
    AssumptionCheck c;
    c.name = "f1";
    bool sign_ok = true;
    for (double t : mesh)
      if (nl.f(t) < 0.0) {
        sign_ok = false;
        c.witness = t;
        break;
      }
    std::vector<double> probes;
    for (int k = 0; k <= 6; ++k) probes.push_back(mesh.front() * std::pow(10.0, -k));
    bool small_ok = true;
    double prev = std::numeric_limits<double>::infinity();
    for (double s : probes) {
      const double v = nl.f(s) / s;
      if (!(v <= prev)) small_ok = false;
      prev = v;
    }
    const double first = nl.f(probes.front()) / probes.front();
    if (!(prev <= 0.5 * first)) small_ok = false;
    double growth_max = 0.0, growth_end = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mesh[i] < 1.0) continue;
      const double t = mesh[i];
      const double g = std::exp(std::log(nl.f(t)) - nl.p() * std::log(t) - kFourPi * t * t);
      if (i >= n / 2) growth_max = std::max(growth_max, g);
      growth_end = g;
    }
    const bool growth_ok = std::isfinite(growth_end) && growth_end <= growth_max * (1.0 + 1e-9);
    c.pass = sign_ok && small_ok && growth_ok;
    c.value = prev;
    if (!sign_ok) c.detail = "f is negative on the mesh";
    else if (!small_ok) c.detail = "f(t)/t does not decay toward 0";
    else if (!growth_ok) c.detail = "f(t) / (t^p e^{4 pi t^2}) keeps growing at the end of the mesh";
    else c.detail = "f >= 0, f(t)/t -> 0, f(t) <= C t^p e^{4 pi t^2}";
    if (c.witness == 0.0) c.witness = small_ok ? t_end : probes.back();
    rep.checks.push_back(c);
  }

  // (f2): tau <= F f'/f^2 <= C
  {
    rep.ratio_min = std::numeric_limits<double>::infinity();
    rep.ratio_max = -std::numeric_limits<double>::infinity();
    for (double t : mesh) {
      const double r = nl.ratio(t);
      if (r < rep.ratio_min) {
        rep.ratio_min = r;
        rep.ratio_min_at = t;
      }
      if (r > rep.ratio_max) {
        rep.ratio_max = r;
        rep.ratio_max_at = t;
      }
    }
    AssumptionCheck c;
    c.name = "f2";
    const bool lo = rep.ratio_min >= nl.tau();
    const bool hi = rep.ratio_max <= nl.C();
    c.pass = lo && hi;
    c.value = lo ? rep.ratio_max : rep.ratio_min;
    c.witness = lo ? rep.ratio_max_at : rep.ratio_min_at;
    c.detail = "ratio in [" + std::to_string(rep.ratio_min) + ", " + std::to_string(rep.ratio_max) +
               "] against declared [" + std::to_string(nl.tau()) + ", " + std::to_string(nl.C()) + "]";
    rep.checks.push_back(c);
  }

  // (f3): F f'/f^2 -> 1
  {
    rep.ratio_terminal = nl.ratio(t_end);
    bool approaching = true;
    double prev = std::abs(nl.ratio(mesh[tail_begin]) - 1.0);
    for (std::size_t i = tail_begin + 1; i < n; ++i) {
      const double d = std::abs(nl.ratio(mesh[i]) - 1.0);
      if (d > prev * (1.0 + 1e-12) + 1e-15) approaching = false;
      prev = d;
    }
    AssumptionCheck c;
    c.name = "f3";
    c.value = rep.ratio_terminal;
    c.witness = t_end;
    c.pass = approaching && std::abs(rep.ratio_terminal - 1.0) <= 1e-2;
    c.detail = approaching ? "terminal ratio " + std::to_string(rep.ratio_terminal)
                           : "ratio moves away from 1 at the end of the mesh";
    rep.checks.push_back(c);
  }

  // (f4): lim t F(t) e^{-4 pi t^2} >= beta > threshold
  {
    rep.fm_terminal = nl.fm_quantity(t_end);
    bool nondecreasing = true;
    for (std::size_t i = tail_begin + 1; i < n; ++i)
      if (nl.fm_quantity(mesh[i]) < nl.fm_quantity(mesh[i - 1]) * (1.0 - 1e-12)) nondecreasing = false;
    AssumptionCheck c;
    c.name = "f4";
    c.value = rep.fm_terminal;
    c.witness = t_end;
    const bool beta_ok = nl.beta() > rep.threshold;
    c.pass = nondecreasing && rep.fm_terminal >= nl.beta() && beta_ok;
    if (!nondecreasing || rep.fm_terminal < nl.beta())
      c.detail = "t F(t) e^{-4 pi t^2} = " + std::to_string(rep.fm_terminal) + " does not stay above beta";
    else if (!beta_ok)
      c.detail = "declared beta " + std::to_string(nl.beta()) + " is below the threshold " +
                 std::to_string(rep.threshold);
    else
      c.detail = "t F(t) e^{-4 pi t^2} reaches " + std::to_string(rep.fm_terminal);
    rep.checks.push_back(c);
  }

  // growth envelope F <= C t^2 (t <= t_bar), F <= C t^{p-1} e^{4 pi t^2} (t >= t_tilde)
  {
    rep.envelope_tbar = std::min(0.5, 0.5 * t_end);
    rep.envelope_ttilde = std::min(1.0, t_end);
    double lo_sup = 0.0, hi_sup = 0.0, hi_end = 0.0, hi_late = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = mesh[i];
      if (t <= rep.envelope_tbar) lo_sup = std::max(lo_sup, nl.F(t) / (t * t));
      if (t >= rep.envelope_ttilde) {
        const double v = std::exp(std::log(nl.F(t)) - (nl.p() - 1.0) * std::log(t) - kFourPi * t * t);
        hi_sup = std::max(hi_sup, v);
        if (i >= n / 2) hi_late = std::max(hi_late, v);
        hi_end = v;
      }
    }
    rep.envelope_C = std::max(lo_sup, hi_sup);
    AssumptionCheck c;
    c.name = "envelope";
    c.value = rep.envelope_C;
    c.witness = t_end;
    c.pass = std::isfinite(rep.envelope_C) && hi_end <= hi_late * (1.0 + 1e-9);
    c.detail = c.pass ? "bounded by C = " + std::to_string(rep.envelope_C)
                      : "F(t) / (t^{p-1} e^{4 pi t^2}) keeps growing at the end of the mesh";
    rep.checks.push_back(c);
  }

  // F <= M0 f for t >= t0
  {
    rep.f5_t0 = std::min(1.0, t_end);
    double m0 = 0.0, at = rep.f5_t0;
    for (double t : mesh) {
      if (t < rep.f5_t0) continue;
      const double v = nl.F(t) / nl.f(t);
      if (v > m0) {
        m0 = v;
        at = t;
      }
    }
    rep.f5_M0 = m0;
    AssumptionCheck c{.name = "f5", .pass = std::isfinite(m0), .value = m0, .witness = at,
                      .detail = "F <= M0 f for t >= t0"};
    rep.checks.push_back(c);
  }

  // F(t) <= (1 - tau) f(t) t
  {
    double worst = -std::numeric_limits<double>::infinity(), at = mesh.front();
    for (double t : mesh) {
      const double v = nl.F(t) - (1.0 - nl.tau()) * nl.f(t) * t;
      const double scale = nl.f(t) * t;
      const double rel = scale > 0.0 ? v / scale : v;
      if (rel > worst) {
        worst = rel;
        at = t;
      }
    }
    AssumptionCheck c{.name = "quotient_bound", .pass = worst <= 1e-14, .value = worst, .witness = at,
                      .detail = "max of (F - (1 - tau) f t) / (f t)"};
    rep.checks.push_back(c);
  }

  // f = F' and f' = F'' by central differences
  {
    double worst = 0.0, at = mesh.front();
    const std::size_t stride = std::max<std::size_t>(1, n / 50);
    for (std::size_t i = 0; i < n; i += stride) {
      const double t = mesh[i];
      const double h = 1e-5 * std::max(t, 1e-3) / (1.0 + 8.0 * kPi * t * t);
      if (t + h > nl.domain_max() || t - h <= 0.0) continue;
      const double d1 = (nl.F(t + h) - nl.F(t - h)) / (2.0 * h);
      const double d2 = (nl.f(t + h) - nl.f(t - h)) / (2.0 * h);
      const double e1 = std::abs(d1 - nl.f(t)) / std::max(std::abs(nl.f(t)), 1e-300);
      const double e2 = std::abs(d2 - nl.fprime(t)) / std::max(std::abs(nl.fprime(t)), 1e-300);
      if (std::max(e1, e2) > worst) {
        worst = std::max(e1, e2);
        at = t;
      }
    }
    AssumptionCheck c{.name = "derivatives", .pass = worst <= 1e-6, .value = worst, .witness = at,
                      .detail = "relative central-difference mismatch of f and f'"};
    rep.checks.push_back(c);
  }

  if (auto sing = nl.singularity()) {
    rep.domain_singularity = true;
    rep.singularity_at = *sing;
    // confirm numerically that F outgrows t^2 e^{4 pi t^2} at the domain end
    auto scaled = [&](double t) { return std::exp(std::log(nl.F(t)) - 2.0 * std::log(t) - kFourPi * t * t); };
    const double near = scaled(nl.domain_max());
    const double ref = scaled(0.5 * nl.domain_max());
    AssumptionCheck c{.name = "domain", .pass = false, .value = near / ref, .witness = *sing,
                      .detail = "F has a pole at t = " + std::to_string(*sing) +
                                "; evaluation is restricted to (0, " + std::to_string(nl.domain_max()) + "]"};
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace choquard
