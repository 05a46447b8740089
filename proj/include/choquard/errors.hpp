#pragma once

#include <stdexcept>
#include <string>

namespace choquard {

/// Invalid sizes, out-of-range parameters, bad config keys.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A function was asked for a value outside the range it can represent.
class RangeError : public std::range_error {
 public:
  RangeError(const std::string& what, double at) : std::range_error(what), at_(at) {}
  double at() const noexcept { return at_; }

 private:
  double at_;
};

/// Quadrature non-convergence, NaN samples, solver breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two radial objects that must share a grid do not.
class GridMismatch : public std::invalid_argument {
 public:
  GridMismatch() : std::invalid_argument("radial functions live on different grids") {}
  using std::invalid_argument::invalid_argument;
};

}  // namespace choquard
