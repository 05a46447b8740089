#include "choquard/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <thread>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "choquard/errors.hpp"

namespace choquard {

namespace {

constexpr double kPi = std::numbers::pi;

// Coefficients of the 1 - z connection formula for 2F1(a, a; 1; z), a = alpha/2.
struct RieszCoeffs {
  double alpha = 0.0;
  double a = 0.0;
  double a1_minus_one = 0.0;  // Gamma(1-alpha) / Gamma(1-alpha/2)^2 - 1
  double a1 = 1.0;
  double b = 0.0;             // Gamma(alpha-1) / Gamma(alpha/2)^2

  explicit RieszCoeffs(double al) : alpha(al), a(0.5 * al) {
    a1_minus_one = std::expm1(std::lgamma(1.0 - al) - 2.0 * std::lgamma(1.0 - 0.5 * al));
    a1 = 1.0 + a1_minus_one;
    b = std::tgamma(al - 1.0) / (std::tgamma(0.5 * al) * std::tgamma(0.5 * al));
  }
};

// 2F1(a, b; c; w) - 1 by its power series, w <= 1/2.
double series_minus_one(double a, double b, double c, double w) {
  double term = a * b / c * w;
  double sum = term;
  for (int k = 1; k < 400; ++k) {
    term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * w;
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

double hyp_minus_one(const RieszCoeffs& c, double z) {
  if (z <= 0.5) return series_minus_one(c.a, c.a, 1.0, z);
  const double w = 1.0 - z;
  const double first = c.a1_minus_one + c.a1 * series_minus_one(c.a, c.a, c.alpha, w);
  if (w == 0.0) return first;
  const double second =
      std::pow(w, 1.0 - c.alpha) * c.b * (1.0 + series_minus_one(1.0 - c.a, 1.0 - c.a, 2.0 - c.alpha, w));
  return first + second;
}

double riesz_avg(const RieszCoeffs& c, double r, double s) {
  const double big = std::max(r, s), small = std::min(r, s);
  const double z = (small / big) * (small / big);
  return std::pow(big, -c.alpha) * (1.0 + hyp_minus_one(c, z));
}

double galpha_avg(const RieszCoeffs& c, double r, double s) {
  const double big = std::max(r, s), small = std::min(r, s);
  const double z = (small / big) * (small / big);
  const double e = std::expm1(-c.alpha * std::log(big));
  return ((1.0 + e) * hyp_minus_one(c, z) + e) / c.alpha;
}

double closed_avg(const KernelSpec& spec, const RieszCoeffs* c, double r, double s) {
  switch (spec.kind) {
    case KernelKind::log: return -std::log(std::max(r, s));
    case KernelKind::riesz: return riesz_avg(*c, r, s);
    case KernelKind::galpha: return galpha_avg(*c, r, s);
  }
  return 0.0;
}

// Average of K over the disk of radius eps centred at the origin.
double disk_avg(const KernelSpec& spec, double eps) {
  const double al = spec.alpha;
  switch (spec.kind) {
    case KernelKind::log: return -std::log(eps) + 0.5;
    case KernelKind::riesz: return 2.0 * std::pow(eps, -al) / (2.0 - al);
    case KernelKind::galpha: return std::expm1(-al * std::log(eps)) / al * 2.0 / (2.0 - al) + 1.0 / (2.0 - al);
  }
  return 0.0;
}

constexpr char kCacheMagic[8] = {'C', 'H', 'Q', 'K', 'E', 'R', 'N', '1'};

struct CacheHeader {
  char magic[8];
  std::uint64_t n;
  double r_max;
  double alpha;
  std::int32_t kind;
  std::int32_t pad;
  std::uint64_t grid_hash;
};

bool load_cache(const std::filesystem::path& path, const RadialGrid& grid, const KernelSpec& spec,
                Eigen::MatrixXd& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  CacheHeader h{};
  in.read(reinterpret_cast<char*>(&h), sizeof h);
  if (!in || std::memcmp(h.magic, kCacheMagic, sizeof kCacheMagic) != 0) return false;
  if (h.n != grid.size() || h.grid_hash != grid.hash() || h.r_max != grid.r_max() || h.alpha != spec.alpha ||
      h.kind != static_cast<std::int32_t>(spec.kind))
    return false;
  const auto n = static_cast<Eigen::Index>(h.n);
  Eigen::MatrixXd m(n, n);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * n * n));
  if (!in) return false;
  out = std::move(m);
  return true;
}

void store_cache(const std::filesystem::path& path, const RadialGrid& grid, const KernelSpec& spec,
                 const Eigen::MatrixXd& m) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return;
    CacheHeader h{};
    std::memcpy(h.magic, kCacheMagic, sizeof kCacheMagic);
    h.n = grid.size();
    h.r_max = grid.r_max();
    h.alpha = spec.alpha;
    h.kind = static_cast<std::int32_t>(spec.kind);
    h.grid_hash = grid.hash();
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!out) return;
  }
  std::filesystem::rename(tmp, path, ec);
}

}  // namespace

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::riesz: return "riesz";
    case KernelKind::galpha: return "galpha";
    case KernelKind::log: return "log";
  }
  return "unknown";
}

void KernelSpec::validate() const {
  if (kind == KernelKind::log) return;
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("kernel alpha must lie in (0, 1)");
}

double g_alpha(double s, double alpha) {
  if (!(s > 0.0)) throw ConfigError("g_alpha needs s > 0");
  return std::expm1(-alpha * std::log(s)) / alpha;
}

double kernel_value(const KernelSpec& spec, double d) {
  switch (spec.kind) {
    case KernelKind::log: return -std::log(d);
    case KernelKind::riesz: return std::pow(d, -spec.alpha);
    case KernelKind::galpha: return g_alpha(d, spec.alpha);
  }
  return 0.0;
}

double hyp_riesz_minus_one(double alpha, double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw ConfigError("hypergeometric argument must lie in [0, 1]");
  return hyp_minus_one(RieszCoeffs(alpha), z);
}

double angular_avg(const KernelSpec& spec, double r, double s) {
  spec.validate();
  if (r < 0.0 || s < 0.0) throw ConfigError("angular average needs r, s >= 0");
  if (r == 0.0 && s == 0.0) throw ConfigError("angular average is singular at r = s = 0");
  if (spec.kind == KernelKind::log) return closed_avg(spec, nullptr, r, s);
  RieszCoeffs c(spec.alpha);
  return closed_avg(spec, &c, r, s);
}

double angular_avg_quadrature(const KernelSpec& spec, double r, double s) {
  spec.validate();
  if (r < 0.0 || s < 0.0) throw ConfigError("angular average needs r, s >= 0");
  if (r == 0.0 && s == 0.0) throw ConfigError("angular average is singular at r = s = 0");
  const double diff = r - s;
  auto integrand = [&](double th) {
    const double sh = std::sin(0.5 * th);
    const double d = std::sqrt(diff * diff + 4.0 * r * s * sh * sh);
    if (d == 0.0) return 0.0;
    return kernel_value(spec, d);
  };
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  double total = 0.0;
  double worst = 0.0;
  auto piece = [&](double lo, double hi) {
    double err = 0.0, l1 = 0.0;
    total += integrator.integrate(integrand, lo, hi, 1e-14, &err, &l1);
    worst = std::max(worst, err / std::max(l1, 1e-300));
  };
  const double big = std::max(r, s);
  if (r > 0.0 && s > 0.0 && std::abs(diff) < 0.05 * big) {
    const double th_c = std::abs(diff) / std::sqrt(r * s);
    if (th_c > 0.0 && th_c < 0.04) {
      piece(0.0, th_c);
      piece(th_c, std::min(10.0 * th_c, 0.5));
      piece(std::min(10.0 * th_c, 0.5), 0.5);
      piece(0.5, kPi);
    } else {
      piece(0.0, 0.5);
      piece(0.5, kPi);
    }
  } else {
    piece(0.0, kPi);
  }
  if (!std::isfinite(total) || worst > 1e-9)
    throw NumericalError("angular quadrature did not converge at r = " + std::to_string(r) +
                         ", s = " + std::to_string(s));
  return total / kPi;
}

CertResult g_alpha_bounds(double alpha, double beta, std::span<const double> s_mesh) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("g_alpha_bounds needs alpha in (0, 1]");
  if (!(beta > alpha)) throw ConfigError("g_alpha_bounds needs beta > alpha");
  CertResult res;
  res.name = "kernel_bounds";
  double c_beta = -std::numeric_limits<double>::infinity(), c_at = 0.0;
  double violation = 0.0, v_at = 0.0;
  std::size_t used = 0;
  for (double s : s_mesh) {
    if (!(s > 0.0)) continue;
    ++used;
    const double g = g_alpha(s, alpha);
    const double q = g * std::pow(s, beta);
    if (q > c_beta) {
      c_beta = q;
      c_at = s;
    }
    if (s <= 1.0) {
      const double v = -std::log(s) - g;
      if (v > violation) {
        violation = v;
        v_at = s;
      }
    }
  }
  res.value = c_beta;
  res.pass = used > 0 && std::isfinite(c_beta) && violation <= 1e-12;
  res.detail = "C_beta = " + std::to_string(c_beta) + ", lower-bound violation " + std::to_string(violation);
  res.data = {{"alpha", alpha},   {"beta", beta},           {"C_beta", c_beta}, {"C_beta_at", c_at},
              {"violation", violation}, {"violation_at", v_at}, {"mesh_points", used}};
  return res;
}

CertResult kernel_limit_check(std::span<const double> alphas, double tol, double s_lo, double s_hi,
                              std::size_t points) {
  if (alphas.empty() || points < 2 || !(s_lo > 0.0 && s_hi > s_lo))
    throw ConfigError("kernel limit check needs alphas and a mesh inside (0, inf)");
  CertResult res;
  res.name = "kernel_limit";
  std::vector<double> sups;
  bool monotone = true;
  for (double a : alphas) {
    double sup = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
      const double s = s_lo * std::pow(s_hi / s_lo, static_cast<double>(k) / static_cast<double>(points - 1));
      sup = std::max(sup, std::abs(g_alpha(s, a) + std::log(s)));
    }
    if (!sups.empty() && !(sup < sups.back())) monotone = false;
    sups.push_back(sup);
  }
  res.value = sups.back();
  res.pass = monotone && res.value <= tol;
  res.detail = monotone ? "sup |G_alpha + ln s| decreases along the alphas" : "sup does not decrease monotonically";
  res.data = {{"alphas", std::vector<double>(alphas.begin(), alphas.end())},
              {"sups", sups},
              {"monotone", monotone},
              {"tol", tol},
              {"s_range", {s_lo, s_hi}}};
  return res;
}

ConvolutionOperator::ConvolutionOperator(GridPtr grid, KernelSpec spec, Eigen::MatrixXd averages)
    : grid_(std::move(grid)), spec_(spec), avg_(std::move(averages)) {
  if (!grid_) throw ConfigError("convolution operator needs a grid");
  if (avg_.rows() != static_cast<Eigen::Index>(grid_->size()) || avg_.cols() != avg_.rows())
    throw ConfigError("convolution table size does not match the grid");
}

std::vector<double> ConvolutionOperator::apply(std::span<const double> g) const {
  const std::size_t n = size();
  if (g.size() != n) throw GridMismatch("operator and samples have different sizes");
  const auto w = grid_->weights();
  Eigen::VectorXd wg(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) wg[static_cast<Eigen::Index>(j)] = w[j] * g[j];
  // the table is symmetric; the column-major transpose product keeps a fixed per-row order
  Eigen::VectorXd out = avg_.transpose() * wg;
  return {out.data(), out.data() + n};
}

RadialFunction ConvolutionOperator::apply(const RadialFunction& g) const {
  require_same_grid(*grid_, g.grid());
  return RadialFunction(grid_, apply(g.values()));
}

double ConvolutionOperator::bilinear(std::span<const double> g, std::span<const double> h) const {
  const auto kh = apply(h);
  const auto w = grid_->weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < kh.size(); ++i) acc += g[i] * w[i] * kh[i];
  return acc;
}

std::filesystem::path operator_cache_path(const std::filesystem::path& dir, const RadialGrid& grid,
                                          const KernelSpec& spec) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "kernel_%s_%a_%016llx.bin", to_string(spec.kind).c_str(), spec.alpha,
                static_cast<unsigned long long>(grid.hash()));
  return dir / buf;
}

ConvolutionOperator build_operator(GridPtr grid, const KernelSpec& spec, const OperatorOptions& opts) {
  if (!grid) throw ConfigError("build_operator needs a grid");
  spec.validate();
  const std::size_t n = grid->size();
  const double bytes = static_cast<double>(n) * static_cast<double>(n) * sizeof(double);
  if (bytes > static_cast<double>(opts.memory_limit))
    throw ConfigError("dense kernel table for N = " + std::to_string(n) + " needs " +
                      std::to_string(bytes / (1 << 20)) + " MiB, above the memory limit");

  std::filesystem::path cache;
  if (!opts.cache_dir.empty()) {
    cache = operator_cache_path(opts.cache_dir, *grid, spec);
    Eigen::MatrixXd m;
    if (load_cache(cache, *grid, spec, m)) return ConvolutionOperator(grid, spec, std::move(m));
  }

  std::optional<RieszCoeffs> coeffs;
  if (spec.kind != KernelKind::log) coeffs.emplace(spec.alpha);
  const RieszCoeffs* cptr = coeffs ? &*coeffs : nullptr;
  const auto r = grid->nodes();

  // probe the closed form against quadrature before trusting it
  bool closed_ok = true;
  if (spec.kind != KernelKind::log) {
    const std::size_t probes[] = {1, 2, n / 9, n / 5, n / 3, n / 2, (2 * n) / 3, n - 2, n - 1};
    for (std::size_t i : probes)
      for (std::size_t j : probes) {
        if (j < i) continue;
        const std::size_t jj = j == i && j + 1 < n ? j + 1 : j;
        const double a = closed_avg(spec, cptr, r[i], r[jj]);
        const double b = angular_avg_quadrature(spec, r[i], r[jj]);
        if (!(std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(b)))) closed_ok = false;
        const double d0 = closed_avg(spec, cptr, r[i], r[i]);
        const double d1 = angular_avg_quadrature(spec, r[i], r[i]);
        if (!(std::abs(d0 - d1) <= 1e-8 * std::max(1.0, std::abs(d1)))) closed_ok = false;
      }
  }

  Eigen::MatrixXd avg(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  auto entry = [&](std::size_t i, std::size_t j) {
    if (i == 0 && j == 0) return disk_avg(spec, r[1] / std::sqrt(2.0));
    return closed_ok ? closed_avg(spec, cptr, r[i], r[j]) : angular_avg_quadrature(spec, r[i], r[j]);
  };
  auto rows = [&](unsigned worker, unsigned stride) {
    for (std::size_t i = worker; i < n; i += stride)
      for (std::size_t j = i; j < n; ++j) {
        const double v = entry(i, j);
        avg(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        avg(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
  };
  const unsigned workers = std::max(1u, opts.workers);
  if (workers == 1) {
    rows(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < workers; ++k) pool.emplace_back(rows, k, workers);
    for (auto& t : pool) t.join();
  }
  if (!avg.allFinite()) throw NumericalError("kernel table has non-finite entries");

  if (!cache.empty()) store_cache(cache, *grid, spec, avg);
  return ConvolutionOperator(grid, spec, std::move(avg));
}

double hls_sharp_constant(double alpha) { return std::pow(kPi, 0.5 * alpha) / (1.0 - 0.5 * alpha); }

}  // namespace choquard
