#include "choquard/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <Eigen/LU>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "choquard/errors.hpp"

namespace choquard {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> axpy(std::span<const double> x, double a, std::span<const double> y) {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * y[i];
  return out;
}

// Energy that reports +inf instead of throwing when a trial state leaves the domain.
double safe_energy(const EnergyModel& model, std::span<const double> u) {
  try {
    return model.energy(u);
  } catch (const RangeError&) {
    return std::numeric_limits<double>::infinity();
  }
}

double safe_residual(const EnergyModel& model, std::span<const double> u) {
  try {
    return model.residual(u);
  } catch (const RangeError&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Energies of path states 1..m-1, split over workers in contiguous blocks.
void path_energies(const EnergyModel& model, const std::vector<std::vector<double>>& path, std::vector<double>& E,
                   unsigned workers) {
  const std::size_t m = path.size() - 1;
  E.assign(path.size(), 0.0);
  E[m] = safe_energy(model, path[m]);
  auto run = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) E[k] = safe_energy(model, path[k]);
  };
  if (workers <= 1 || m < 3) {
    run(1, m);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t count = m - 1, per = (count + workers - 1) / workers;
  for (std::size_t lo = 1; lo < m; lo += per) pool.emplace_back(run, lo, std::min(m, lo + per));
  for (auto& t : pool) t.join();
}

std::size_t argmax_interior(const std::vector<double>& E) {
  std::size_t best = 1;
  for (std::size_t k = 2; k + 1 < E.size(); ++k)
    if (E[k] > E[best]) best = k;
  return best;
}

// Derivative of t -> I(t v).
double ray_slope(const EnergyModel& model, std::span<const double> v, double t) {
  std::vector<double> u(v.begin(), v.end());
  for (auto& x : u) x *= t;
  return dot(model.derivative(u), v);
}

// Maximizer of t -> I(t v) inside [lo, hi], where the slope changes sign from + to -.
double ray_argmax(const EnergyModel& model, std::span<const double> v, double lo, double hi) {
  const double fl = ray_slope(model, v, lo), fh = ray_slope(model, v, hi);
  if (!(fl > 0.0) || !(fh < 0.0)) return std::abs(fl) < std::abs(fh) ? lo : hi;
  boost::uintmax_t iters = 100;
  auto [a, b] = boost::math::tools::toms748_solve([&](double t) { return ray_slope(model, v, t); }, lo, hi, fl, fh,
                                                  boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (a + b);
}

// Ray path: states (k / m) T v with I(T v) < 0. Returns false when no negative level is reachable.
bool ray_endpoint(const EnergyModel& model, const std::vector<double>& v, double& T) {
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, x);
  if (!(vmax > 0.0)) return false;
  const double dmax = model.nonlinearity().domain_max();
  T = std::max(T, 1.0);
  for (;;) {
    std::vector<double> e(v);
    for (auto& x : e) x *= T;
    const double level = safe_energy(model, e);
    if (level < 0.0) return true;
    if (!std::isfinite(level) || T * vmax > dmax) return false;
    T *= 1.5;
  }
}

struct RayState {
  std::vector<double> u;  // ray maximum
  double level = std::numeric_limits<double>::infinity();
  double T = 1.0;
  std::size_t node = 0;   // highest discrete path state
  double node_level = 0.0;
};

// Samples the ray path through v, picks its highest state and polishes it to the ray maximum.
RayState ray_max(const EnergyModel& model, const std::vector<double>& v, std::size_t m, double T_hint,
                 unsigned workers) {
  RayState st;
  st.T = T_hint;
  if (!ray_endpoint(model, v, st.T)) return st;
  std::vector<std::vector<double>> path(m + 1, v);
  for (std::size_t k = 0; k <= m; ++k)
    for (auto& x : path[k]) x *= st.T * static_cast<double>(k) / static_cast<double>(m);
  std::vector<double> E;
  path_energies(model, path, E, workers);
  st.node = argmax_interior(E);
  st.node_level = E[st.node];
  const double h = st.T / static_cast<double>(m);
  const double t = ray_argmax(model, v, h * static_cast<double>(st.node - 1), h * static_cast<double>(st.node + 1));
  st.u = v;
  for (auto& x : st.u) x *= t;
  st.level = std::max(safe_energy(model, st.u), st.node_level);
  return st;
}


}  // namespace

Endpoint find_endpoint(const EnergyModel& model, double t_start) {
  auto e0 = bump_e0(model.grid_ptr());
  const double dmax = model.nonlinearity().domain_max();
  auto level = [&](double t) { return model.energy((e0 * t).values()); };
  double lo = 0.0, hi = t_start;
  for (;;) {
    if (hi > dmax) throw RangeError("no negative level reachable in machine range along t e0", hi);
    if (level(hi) < 0.0) break;
    lo = hi;
    hi *= 2.0;
  }
  for (int k = 0; k < 60 && hi - lo > 1e-12 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (level(mid) < 0.0 ? hi : lo) = mid;
  }
  Endpoint ep(e0 * hi);
  ep.t0 = hi;
  ep.level = level(hi);
  return ep;
}

double jacobian_fd_error(const EnergyModel& model, std::span<const double> u, std::size_t columns) {
  const auto J = model.jacobian(u);
  const std::size_t n = u.size();
  double worst = 0.0;
  for (std::size_t c = 0; c < columns; ++c) {
    const std::size_t col = columns == 1 ? 0 : c * (n - 1) / (columns - 1);
    const double h = 1e-6 * std::max(1.0, std::abs(u[col]));
    std::vector<double> up(u.begin(), u.end()), dn = up;
    up[col] += h;
    dn[col] -= h;
    const auto dp = model.derivative(up), dm = model.derivative(dn);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i), cc = static_cast<Eigen::Index>(col);
      err = std::max(err, std::abs((dp[i] - dm[i]) / (2.0 * h) - J(ii, cc)));
      scale = std::max(scale, std::abs(J(ii, cc)));
    }
    worst = std::max(worst, err / std::max(scale, std::numeric_limits<double>::min()));
  }
  return worst;
}

NewtonResult refine_newton(const EnergyModel& model, const RadialFunction& u0, const SolverOptions& opts) {
  require_same_grid(u0.grid(), model.grid());
  NewtonResult res(u0);
  std::vector<double> u(u0.values().begin(), u0.values().end());
  double r = model.residual(u);
  res.history.push_back(r);
  res.levels.push_back(model.energy(u));
  if (r <= opts.tol) {
    res.residual = r;
    res.converged = true;
    res.message = "start already converged";
    return res;
  }
  res.jacobian_check = jacobian_fd_error(model, u);
  if (res.jacobian_check > 1e-5) res.message = "jacobian disagrees with finite differences";

  while (res.iterations < opts.max_newton && r > opts.tol) {
    const auto d = model.derivative(u);
    const Eigen::MatrixXd J = model.jacobian(u);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    std::vector<double> step(u.size());
    bool fallback = !(lu.rcond() > 1e-14);
    if (!fallback) {
      Eigen::Map<const Eigen::VectorXd> rhs(d.data(), static_cast<Eigen::Index>(d.size()));
      Eigen::VectorXd delta = lu.solve(-rhs);
      if (!delta.allFinite()) fallback = true;
      else std::copy(delta.data(), delta.data() + delta.size(), step.begin());
    }
    auto search = [&](const std::vector<double>& dir, double& lambda, double& r_new) {
      for (lambda = 1.0; lambda >= 1.0 / 1024.0; lambda *= 0.5) {
        r_new = safe_residual(model, axpy(u, lambda, dir));
        if (r_new <= (1.0 - 1e-4 * lambda) * r) return true;
      }
      return false;
    };
    double lambda = 0.0, r_new = r;
    bool ok = !fallback && search(step, lambda, r_new);
    if (!ok) {
      // gradient flow on the residual-free energy: small Sobolev step
      auto g = model.sobolev_gradient(u);
      for (auto& v : g) v = -v;
      res.used_fallback = true;
      ok = search(g, lambda, r_new);
      if (ok) step = std::move(g);
    }
    if (!ok) {
      res.message = "newton diverged: no step reduces the residual";
      break;
    }
    u = axpy(u, lambda, step);
    r = r_new;
    res.history.push_back(r);
    res.levels.push_back(model.energy(u));
    res.steps.push_back(lambda);
    ++res.iterations;
  }
  res.u = RadialFunction(u0.grid_ptr(), std::move(u));
  res.residual = r;
  res.converged = r <= opts.tol;
  if (res.converged && res.message.empty()) res.message = "converged";
  if (!res.converged && res.message.empty()) res.message = "newton iteration cap reached";
  return res;
}

nlohmann::json MountainPassResult::to_json() const {
  return {{"c_level", c_level},
          {"residual", residual},
          {"l2_residual", l2_residual},
          {"iterations", iterations},
          {"newton_iterations", newton_iterations},
          {"alpha", alpha},
          {"t0", t0},
          {"positivity", positivity_flag},
          {"converged", converged},
          {"warm_started", warm_started},
          {"jacobian_check", jacobian_check},
          {"h1_norm", h1_norm(u_star)},
          {"u_max", u_star.max()},
          {"u_min", u_star.min()},
          {"energy", breakdown.to_json()},
          {"path_levels", path_levels},
          {"message", message}};
}

namespace {

void append_newton_log(const NewtonResult& nr, std::vector<IterationRecord>& log) {
  for (std::size_t k = 0; k < nr.history.size(); ++k)
    log.push_back({k, nr.levels[k], nr.history[k], k == 0 ? 0.0 : nr.steps[k - 1], "newton"});
}

void finish(const EnergyModel& model, MountainPassResult& out) {
  const auto v = out.u_star.values();
  out.c_level = model.energy(v);
  out.residual = model.residual(v);
  out.l2_residual = model.l2_residual(v);
  out.breakdown = model.breakdown(v);
  out.alpha = model.alpha();
  const double mx = out.u_star.max();
  out.positivity_flag = mx > 0.0 && out.u_star.min() >= -1e-10 * mx;
}

}  // namespace

MountainPassResult mountain_pass(const EnergyModel& model, const SolverOptions& opts) {
  if (opts.path_nodes < 2) throw ConfigError("solver.path_nodes must be at least 2");
  if (!(opts.tol > 0.0) || !(opts.tol_path > 0.0)) throw ConfigError("solver tolerances must be positive");
  const auto& grid = model.grid();

  if (opts.warm_start) {
    auto start = same_grid(opts.warm_start->grid(), grid) ? *opts.warm_start : resample(*opts.warm_start, model.grid_ptr());
    auto nr = refine_newton(model, start, opts);
    if (nr.converged && h1_norm(nr.u) > 1e-6 && model.energy(nr.u) > 0.0) {
      MountainPassResult out(std::move(nr.u));
      out.warm_started = true;
      append_newton_log(nr, out.log);
      out.newton_iterations = nr.iterations;
      out.jacobian_check = nr.jacobian_check;
      out.converged = true;
      out.message = "warm start refined by newton";
      finish(model, out);
      out.path_levels.push_back(out.c_level);
      return out;
    }
  }

  auto ep = find_endpoint(model);
  auto e = ep.e * opts.endpoint_scale;
  if (!(safe_energy(model, e.values()) < 0.0)) throw ConfigError("scaled endpoint does not have negative energy");

  const std::size_t m = opts.path_nodes;
  const double tol_path = opts.newton ? opts.tol_path : opts.tol;
  std::vector<double> v(e.values().begin(), e.values().end());
  auto st = ray_max(model, v, m, 1.0, opts.workers);
  if (st.u.empty()) throw NumericalError("initial path has no interior maximum");
  std::vector<double> levels;
  std::vector<IterationRecord> out_log;
  std::size_t iter = 0;
  std::string message;
  bool path_ok = false;
  for (; iter < opts.max_iter; ++iter) {
    levels.push_back(st.level);
    const auto d = model.derivative(st.u);
    const auto p = h1_matrix_solve(grid, d);
    const double g2 = dot(d, p);
    const double unorm = std::sqrt(h1_norm_sq(grid, st.u));
    const double res = std::sqrt(std::max(0.0, g2)) / (1.0 + unorm);
    if (res <= tol_path) {
      path_ok = true;
      out_log.push_back({iter, st.level, res, 0.0, "path"});
      break;
    }
    double s = std::min(1.0, 0.5 * unorm / std::sqrt(g2));
    bool accepted = false;
    for (; s > 1e-12; s *= 0.5) {
      auto trial = ray_max(model, axpy(st.u, -s, p), m, 1.0, opts.workers);
      if (trial.level <= st.level - opts.armijo_c * s * g2) {
        out_log.push_back({iter, st.level, res, s, "path"});
        st = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      message = "line search failed at the path maximum";
      break;
    }
  }
  std::vector<double> top = st.u;
  if (!path_ok && message.empty()) message = "path iteration cap reached";

  MountainPassResult out(RadialFunction(model.grid_ptr(), std::move(top)));
  out.iterations = iter;
  out.t0 = ep.t0 * opts.endpoint_scale;
  out.path_levels = std::move(levels);
  out.log = std::move(out_log);
  if (path_ok && opts.newton) {
    auto nr = refine_newton(model, out.u_star, opts);
    append_newton_log(nr, out.log);
    out.newton_iterations = nr.iterations;
    out.jacobian_check = nr.jacobian_check;
    out.converged = nr.converged;
    out.message = nr.message;
    out.u_star = std::move(nr.u);
  } else {
    out.converged = path_ok;
    out.message = path_ok ? "path phase converged" : message;
  }
  finish(model, out);
  return out;
}

namespace {

// H at every sample, accumulated over the sorted values so each piece is a short quadrature.
std::vector<double> H_samples(const Nonlinearity& nl, std::span<const double> u) {
  if (nl.family() == Family::power) {
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = nl.H(u[i]);
    return out;
  }
  std::vector<std::size_t> order(u.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
  auto integrand = [&nl](double s) { return std::sqrt(nl.ratio(std::max(s, 1e-300))); };
  std::vector<double> out(u.size(), 0.0);
  double t_prev = 0.0, h_prev = 0.0;
  for (std::size_t i : order) {
    const double t = u[i];
    if (t <= 0.0) continue;
    if (t > t_prev) {
      h_prev += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, t_prev, t, 8, 1e-14);
      t_prev = t;
    }
    out[i] = h_prev;
  }
  return out;
}

}  // namespace

nlohmann::json DiagReport::to_json() const {
  return {{"norm_sq", norm_sq},
          {"c_level", c_level},
          {"tau", tau},
          {"tau_norm_sq", tau_bound_lhs},
          {"H_norm_sq", H_norm_sq},
          {"two_c", 2.0 * c_level},
          {"quotient_violation", quotient_violation},
          {"slack", slack},
          {"tau_bound", tau_bound},
          {"H_bound", H_bound},
          {"quotient_bound", quotient_bound},
          {"pass", pass()}};
}

DiagReport cerami_diagnostics(const RadialFunction& u, const Nonlinearity& nl, double c_level, double slack) {
  DiagReport rep;
  const auto& g = u.grid();
  rep.c_level = c_level;
  rep.tau = nl.tau();
  rep.slack = slack;
  rep.norm_sq = h1_norm_sq(g, u.values());
  rep.tau_bound_lhs = rep.tau * rep.norm_sq;
  const auto Hu = H_samples(nl, u.values());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double q = std::abs(nl.quotient(u[i])) - (1.0 - rep.tau) * std::abs(u[i]);
    rep.quotient_violation = std::max(rep.quotient_violation, q);
  }
  rep.H_norm_sq = h1_norm_sq(g, Hu);
  rep.tau_bound = rep.tau_bound_lhs <= 2.0 * c_level + slack;
  rep.H_bound = rep.H_norm_sq <= 2.0 * c_level + slack;
  rep.quotient_bound = rep.quotient_violation <= slack;
  return rep;
}

}  // namespace choquard
