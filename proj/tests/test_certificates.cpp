#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "choquard/certificates.hpp"
#include "choquard/errors.hpp"
#include "oracles.hpp"

using namespace choquard;

namespace {

double delta_oracle(double n) {
  const double L = std::log(n);
  return 1.0 / (4.0 * L) - 1.0 / (4.0 * n * n * L) - 1.0 / (2.0 * n * n);
}

}  // namespace

TEST_CASE("Moser function point values") {
  const MoserConfig cfg{10, 0.2};
  auto g = moser_grid(*make_grid(4096, 40.0, 1.05, 0.25), cfg);
  auto w = moser_w(cfg, g);
  CHECK(w[0] == doctest::Approx(std::sqrt(std::log(10.0)) / std::sqrt(2.0 * oracle::pi)).epsilon(1e-15));
  CHECK(w[0] == doctest::Approx(0.605366).epsilon(1e-6));
  CHECK(moser_value(cfg, 0.2) == 0.0);
  CHECK(moser_value(cfg, 0.3) == 0.0);
  CHECK(moser_value(cfg, 0.02) == doctest::Approx(moser_value(cfg, 0.0)).epsilon(1e-15));
  CHECK(moser_value(cfg, 0.02 * (1 + 1e-9)) == doctest::Approx(moser_value(cfg, 0.0)).epsilon(1e-8));
  for (std::size_t i = 0; i < w.size(); ++i)
    if (g->r(i) >= 0.2) CHECK(w[i] == 0.0);
}

TEST_CASE("Moser configuration and grid checks") {
  CHECK_THROWS_AS(MoserConfig({1, 0.2}).validate(), ConfigError);
  CHECK_THROWS_AS(MoserConfig({10, 0.25}).validate(), ConfigError);
  auto plain = make_grid(33, 1.0, 1.0);
  CHECK_THROWS_AS(moser_w({10, 0.2}, plain), ConfigError);
  const double kinks[] = {0.02, 0.2};
  CHECK_THROWS_AS(moser_w({10, 0.2}, with_nodes(*plain, kinks)), ConfigError);
}

TEST_CASE("closed-form Moser norm") {
  CHECK(moser_delta(10) == doctest::Approx(delta_oracle(10.0)).epsilon(1e-15));
  CHECK(moser_delta(10) == doctest::Approx(0.1024878).epsilon(1e-6));
  CHECK(moser_norm_closed({10, 0.2}) == doctest::Approx(1.0040995).epsilon(1e-7));
  CHECK(moser_delta(1000000) < 0.02);
  CHECK(moser_norm_closed({1000000, 0.2}) - 1.0 < 1e-3);
  CHECK(moser_norm_closed({10, 0.2}) == doctest::Approx(oracle::moser_norm_sq(10, 0.2)).epsilon(1e-14));
}

TEST_CASE("quadrature reproduces the Moser norm") {
  auto base = make_grid(20000, 40.0, 1.02, 0.25);
  for (int n : {10, 100, 1000}) {
    const MoserConfig cfg{n, 0.2};
    auto w = moser_w(cfg, moser_grid(*base, cfg));
    const double closed = moser_norm_closed(cfg);
    INFO("n = " << n);
    CHECK(std::abs(h1_norm_sq(w.grid(), w.values()) - closed) <= 1e-4 * closed);
  }
}

TEST_CASE("t_n and psi_n") {
  const MoserConfig cfg{100, 0.2};
  const double d = delta_oracle(100.0);
  const double oracle_t2 = 1.0 + (std::log(1.0 + 0.04 * d) - std::log(4.0)) / (4.0 * std::log(100.0));
  CHECK(t_n_squared(cfg) == doctest::Approx(oracle_t2).epsilon(1e-15));
  CHECK(1.0 + 0.04 * d == doctest::Approx(1.0021693).epsilon(1e-6));

  // t_n is the maximizer of psi_n
  const double tn = std::sqrt(t_n_squared(cfg));
  double best = -1e300, arg = 0.0;
  for (int k = 0; k <= 200000; ++k) {
    const double t = 1.5 * k / 200000.0;
    const double v = 0.5 * (1.0 + 0.04 * d) * t * t - std::pow(100.0, 4.0 * (t * t - 1.0)) / (2.0 * std::log(100.0));
    if (v > best) {
      best = v;
      arg = t;
    }
  }
  CHECK(arg == doctest::Approx(tn).epsilon(1e-4));
  CHECK(psi_n(cfg, tn) == doctest::Approx(best).epsilon(1e-9));

  for (int n : {50, 1000, 100000}) {
    const double t2 = t_n_squared({n, 0.2});
    CHECK(t2 >= 0.5);
    CHECK(t2 <= 2.0);
  }
  const int n_min = psi_threshold_n(0.2);
  REQUIRE(n_min >= 2);
  for (int n : {n_min, n_min + 1, 1000, 99999}) {
    const MoserConfig c{n, 0.2};
    CHECK(psi_n(c, std::sqrt(t_n_squared(c))) < 0.5);
  }
}

TEST_CASE("case-two function stays above one") {
  std::vector<double> mesh;
  for (int k = 0; k <= 400; ++k) mesh.push_back(std::sqrt(2.0) + 4.0 * k / 400.0);
  const int n0 = case2_n0(mesh);
  REQUIRE(n0 >= 2);
  for (int n : {n0, n0 + 1, 10, 1000})
    for (double t : mesh) CHECK(std::pow(n, 4.0 * (t * t - 1.0)) / (std::pow(t, 4) * std::log(n)) >= 1.0);
  CHECK(g_case2(10.0, 1.5) == doctest::Approx(std::pow(10.0, 5.0) / (std::pow(1.5, 4) * std::log(10.0))));
}

TEST_CASE("level curve of the Moser family stays below one half") {
  const MoserConfig cfg{50, 0.2};
  auto grid = moser_grid(*make_grid(2048, 40.0, 1.05, 0.25), cfg);
  auto log_op = std::make_shared<const ConvolutionOperator>(build_operator(grid, KernelSpec::log()));
  auto nl = Nonlinearity::exp_critical();
  EnergyModel m(nl, std::make_shared<const ConvolutionOperator>(build_operator(grid, KernelSpec::galpha(0.1))));
  CHECK(m.energy(moser_w(cfg, grid) * 0.0) == 0.0);
  const auto mesh = level_t_mesh(cfg, m);
  auto cert = level_certificate(cfg, m, *log_op, mesh);
  CHECK(cert.levels.front() == 0.0);
  CHECK(cert.t_negative > 0.0);
  CHECK(cert.max_level > 0.0);
  CHECK(cert.verdict_a);
  CHECK(cert.verdict_b);
  CHECK(cert.verdict_c);
  CHECK(cert.log_bound_violation == 0.0);
  CHECK(cert.ln2_bound_violation == 0.0);
  CHECK(cert.epsilon == doctest::Approx(0.5 * (10.0 - fm_threshold(0.2))));
  MESSAGE("max level " << cert.max_level << " at t = " << cert.argmax_t << ", majorant points "
                       << cert.majorant_points);
  auto j = cert.to_json();
  CHECK(j["levels"].size() == mesh.size());

  auto low = Nonlinearity::exp_critical().with_constants({}, {}, 5.0, {});
  EnergyModel lm(low, m.kernel_ptr());
  CHECK_THROWS_AS(level_certificate(cfg, lm, *log_op, mesh), ConfigError);
}

TEST_CASE("radial bound") {
  auto g = make_grid(4096, 40.0, 1.0);
  auto u = RadialFunction::sample(g, [](double r) { return std::exp(-r); });
  auto res = radial_bound_check(u);
  CHECK(res.pass);
  CHECK(res.data["argmax_r"].get<double>() == doctest::Approx(1.0).epsilon(0.01));
  CHECK(res.value == doctest::Approx(std::exp(-1.0) / h1_norm(u)).epsilon(1e-3));
  CHECK_THROWS_AS(radial_bound_check(RadialFunction::zeros(g)), ConfigError);
}

TEST_CASE("decay fits") {
  auto g = make_grid(4096, 40.0, 1.05, 0.25);
  auto fast = decay_certificate(RadialFunction::sample(g, [](double r) { return std::exp(-r); }), 5.0);
  CHECK(fast.applicable);
  CHECK(fast.rate == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fast.M == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(fast.pass);
  auto slow = decay_certificate(RadialFunction::sample(g, [](double r) { return std::exp(-r / 4.0); }), 5.0);
  CHECK(slow.rate == doctest::Approx(0.25).epsilon(1e-9));
  CHECK_FALSE(slow.pass);
  auto none = decay_certificate(RadialFunction::sample(g, [](double r) { return r < 3.0 ? 1.0 : 0.0; }), 5.0);
  CHECK_FALSE(none.applicable);
  CHECK_FALSE(none.to_result().applicable);
  CHECK_THROWS_AS(decay_certificate(RadialFunction::zeros(g), 30.0), ConfigError);
}

TEST_CASE("HLS quotient") {
  auto grid = make_grid(1024, 20.0, 1.05, 0.25);
  ConvolutionOperator riesz = build_operator(grid, KernelSpec::riesz(0.5));
  auto b = RadialFunction::sample(grid, [](double r) { return bump(r); });
  const double p = 4.0 / 3.5;
  const double q = riesz.bilinear(b.values(), b.values()) / std::pow(lp_norm(b, p), 2);
  CHECK(q > 0.0);
  CHECK(q <= 2.0 * std::sqrt(oracle::pi));
  CHECK(q <= hls_sharp_constant(0.5) * (1.0 + 1e-3));

  auto res = hls_certificate(riesz, 50, 7);
  CHECK(res.pass);
  CHECK(res.data["quotients"].size() == 50);
  CHECK(res.value <= 2.0 * std::sqrt(oracle::pi) * 1.001);
  CHECK(hls_certificate(riesz, 50, 7).value == res.value);
  CHECK(hls_certificate(riesz, 0, 7).value == 0.0);
}
