#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "choquard/errors.hpp"
#include "choquard/solver.hpp"

using namespace choquard;

namespace {

GridPtr test_grid() {
  static const GridPtr g = make_grid(512, 40.0, 1.08, 0.25);
  return g;
}

OperatorPtr galpha(double alpha) {
  return std::make_shared<const ConvolutionOperator>(build_operator(test_grid(), KernelSpec::galpha(alpha)));
}

const MountainPassResult& power_solution() {
  static const MountainPassResult r = mountain_pass(EnergyModel(Nonlinearity::power(1.0, 4.0), galpha(0.5)));
  return r;
}

}  // namespace

TEST_CASE("endpoint scan finds a negative level") {
  EnergyModel m(Nonlinearity::power(1.0, 4.0), galpha(0.5));
  CHECK(m.energy(RadialFunction::zeros(test_grid())) == 0.0);
  auto ep = find_endpoint(m);
  CHECK(ep.level < 0.0);
  CHECK(ep.t0 > 0.0);
  CHECK(m.energy(ep.e) == doctest::Approx(ep.level));
  CHECK(m.energy(ep.e * 0.99) >= 0.0);

  EnergyModel weak(Nonlinearity::power(1e-3, 2.2), galpha(0.5));
  try {
    auto far = find_endpoint(weak);
    CHECK(far.t0 > ep.t0);
    CHECK(far.level < 0.0);
  } catch (const RangeError& e) {
    CHECK(std::string(e.what()).find("no negative level") != std::string::npos);
  }
}

TEST_CASE("mountain pass for the quartic power family") {
  const auto& r = power_solution();
  CHECK(r.converged);
  CHECK(r.residual <= 1e-8);
  CHECK(r.c_level > 0.0);
  CHECK(r.positivity_flag);
  CHECK(r.u_star.min() >= -1e-10 * r.u_star.max());
  CHECK(r.jacobian_check <= 1e-5);
  CHECK(r.alpha == 0.5);
  for (std::size_t i = 1; i < r.path_levels.size(); ++i) CHECK(r.path_levels[i] <= r.path_levels[i - 1] + 1e-12);
  CHECK(r.c_level <= r.path_levels.back() + 1e-9);
  auto j = r.to_json();
  CHECK(j["energy"]["total"].get<double>() == doctest::Approx(r.c_level));
}

TEST_CASE("doubling the endpoint keeps the level") {
  SolverOptions o;
  o.endpoint_scale = 2.0;
  auto r2 = mountain_pass(EnergyModel(Nonlinearity::power(1.0, 4.0), galpha(0.5)), o);
  REQUIRE(r2.converged);
  CHECK(std::abs(r2.c_level - power_solution().c_level) <= 1e-6);
}

TEST_CASE("critical point certificate against random directions") {
  const auto& r = power_solution();
  EnergyModel m(Nonlinearity::power(1.0, 4.0), galpha(0.5));
  const auto d = m.derivative(r.u_star.values());
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const double tol = 1e-8;
  for (int k = 0; k < 20; ++k) {
    std::vector<double> v(d.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = nd(rng) * std::exp(-test_grid()->r(i) / 4.0);
    double dv = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dv += d[i] * v[i];
    CHECK(std::abs(dv) <= tol * (1.0 + h1_norm(r.u_star)) * std::sqrt(h1_norm_sq(*test_grid(), v)));
  }
}

TEST_CASE("newton from a converged point and from a perturbation") {
  const auto& r = power_solution();
  EnergyModel m(Nonlinearity::power(1.0, 4.0), galpha(0.5));
  auto same = refine_newton(m, r.u_star);
  CHECK(same.iterations == 0);
  CHECK(same.converged);

  auto bumped = RadialFunction::sample(test_grid(), [](double x) { return 1e-3 * std::exp(-x * x); });
  auto nr = refine_newton(m, r.u_star + bumped);
  REQUIRE(nr.converged);
  CHECK(nr.iterations >= 2);
  CHECK_FALSE(nr.used_fallback);
  CHECK(nr.jacobian_check <= 1e-5);
  // quadratic: each contraction factor is smaller than the last
  for (std::size_t k = 2; k < nr.history.size(); ++k) {
    const double prev = nr.history[k - 1] / nr.history[k - 2];
    const double now = nr.history[k] / nr.history[k - 1];
    CHECK(now < prev);
  }
  CHECK(jacobian_fd_error(m, nr.u.values()) <= 1e-5);
  CHECK(std::abs(m.energy(nr.u) - r.c_level) <= 1e-9);
}

TEST_CASE("iteration cap yields a diagnostic result") {
  SolverOptions o;
  o.max_iter = 1;
  o.newton = false;
  auto r = mountain_pass(EnergyModel(Nonlinearity::power(1.0, 4.0), galpha(0.5)), o);
  CHECK_FALSE(r.converged);
  CHECK(r.message.find("cap") != std::string::npos);
  CHECK(r.residual > o.tol);
}

TEST_CASE("results do not depend on the worker count") {
  SolverOptions o;
  o.workers = 3;
  auto r = mountain_pass(EnergyModel(Nonlinearity::power(1.0, 4.0), galpha(0.5)), o);
  CHECK(r.c_level == power_solution().c_level);
  CHECK(r.iterations == power_solution().iterations);
}

TEST_CASE("Cerami diagnostics") {
  auto nl = Nonlinearity::exp_critical();
  CHECK(cerami_diagnostics(RadialFunction::zeros(test_grid()), nl, 0.0).pass());

  EnergyModel m(nl, galpha(0.25));
  auto r = mountain_pass(m);
  REQUIRE(r.converged);
  CHECK(r.c_level > 0.0);
  CHECK(r.c_level < 0.5);
  auto d = cerami_diagnostics(r.u_star, nl, r.c_level);
  CHECK(d.tau_bound);
  CHECK(d.H_bound);
  CHECK(d.quotient_bound);

  auto big = cerami_diagnostics(r.u_star * 10.0, nl, r.c_level);
  CHECK_FALSE(big.tau_bound);
  CHECK_FALSE(big.pass());
}

TEST_CASE("warm start across a change of exponent") {
  SolverOptions o;
  o.warm_start = power_solution().u_star;
  auto r = mountain_pass(EnergyModel(Nonlinearity::power(1.0, 4.0), galpha(0.25)), o);
  CHECK(r.converged);
  CHECK(r.warm_started);
  CHECK(r.residual <= 1e-8);
  auto cold = mountain_pass(EnergyModel(Nonlinearity::power(1.0, 4.0), galpha(0.25)));
  CHECK(r.c_level == doctest::Approx(cold.c_level).epsilon(1e-9));
}
