#pragma once

// Reference computations used only by the tests. They share no code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                      double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                        int depth = 50) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson(f, a, b, fa, fm, fb, whole, tol, depth);
}

/// Adaptive Simpson on consecutive pieces [p_k, p_{k+1}].
template <class Range>
inline double integrate_pieces(const std::function<double(double)>& f, const Range& pts, double tol = 1e-12) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) acc += integrate(f, pts[k], pts[k + 1], tol);
  return acc;
}

/// Gauss-Legendre with 8 nodes on each of `cells` equal subintervals of [a, b].
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b, int cells) {
  static const double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static const double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  const double h = (b - a) / cells;
  double acc = 0.0;
  for (int c = 0; c < cells; ++c) {
    const double mid = a + (c + 0.5) * h, half = 0.5 * h;
    for (int k = 0; k < 4; ++k) acc += w[k] * (f(mid - half * x[k]) + f(mid + half * x[k]));
  }
  return acc * 0.5 * h;
}

/// Periodic trapezoid average of k(|(r,0) - s e^{i th}|) over th in [0, 2 pi).
inline double circle_average(const std::function<double(double)>& k, double r, double s, int points) {
  double acc = 0.0;
  for (int j = 0; j < points; ++j) {
    const double th = 2.0 * pi * (j + 0.5) / points;
    acc += k(std::sqrt(r * r + s * s - 2.0 * r * s * std::cos(th)));
  }
  return acc / points;
}

/// The Moser profile at radius r.
inline double moser(double r, int n, double rho) {
  const double ln_n = std::log(static_cast<double>(n));
  if (r <= rho / n) return std::sqrt(ln_n) / std::sqrt(2.0 * pi);
  if (r <= rho) return std::log(rho / r) / std::sqrt(ln_n) / std::sqrt(2.0 * pi);
  return 0.0;
}

/// The closed-form Moser norm squared with delta_n from its printed expression.
inline double moser_norm_sq(int n, double rho) {
  const double ln_n = std::log(static_cast<double>(n));
  const double nn = static_cast<double>(n) * n;
  const double delta = 1.0 / (4.0 * ln_n) - 1.0 / (4.0 * nn * ln_n) - 1.0 / (2.0 * nn);
  return 1.0 + rho * rho * delta;
}

/// Least-squares slope of (x, y) pairs.
template <class V>
inline double fit_slope(const V& x, const V& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Brute-force polar tensor quadrature of (|.|^{-alpha} * chi_{B_1})(r), centred at the evaluation point.
inline double riesz_disk(double r, double alpha, int nphi, int nrho) {
  auto ray = [&](double phi, double lo, double hi) {
    return gauss_legendre([&](double rho) { return std::pow(rho, 1.0 - alpha); }, lo, hi, nrho / 8);
  };
  if (r < 1.0) {
    // every ray leaves the disk once, at distance l(phi)
    return gauss_legendre(
        [&](double phi) {
          const double c = r * std::cos(phi);
          const double l = -c + std::sqrt(c * c + 1.0 - r * r);
          return ray(phi, 0.0, l);
        },
        0.0, 2.0 * pi, nphi / 8);
  }
  const double phi_max = std::asin(1.0 / r);
  // phi = phi_max sin(psi) removes the square-root behaviour at tangency
  return 2.0 * gauss_legendre(
                   [&](double psi) {
                     const double phi = phi_max * std::sin(psi);
                     const double c = r * std::cos(phi);
                     const double disc = std::max(0.0, c * c - (r * r - 1.0));
                     return ray(phi, c - std::sqrt(disc), c + std::sqrt(disc)) * phi_max * std::cos(psi);
                   },
                   0.0, 0.5 * pi, nphi / 8);
}

}  // namespace oracle
