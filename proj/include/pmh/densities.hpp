#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace pmh {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

/// log N(x; mean, variance). Returns -inf for a non-positive or non-finite
/// variance and for non-finite x.
inline double gaussian_log_density(double x, double mean, double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(x)) return kNegInf;
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(variance) + d * d / variance);
}

/// log Gamma(x; shape, rate). Returns -inf outside the support x > 0.
inline double gamma_log_density(double x, double shape, double rate) {
  if (!(x > 0.0) || !std::isfinite(x)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

}  // namespace pmh
