#pragma once

// Linear Gaussian state-space model
//
//   x_0 = x0 (point mass),
//   x_t | x_{t-1} ~ N(phi x_{t-1}, sigma_v^2),
//   y_t | x_t     ~ N(x_t, sigma_e^2).

#include <cmath>
#include <vector>

#include "pmh/densities.hpp"
#include "pmh/errors.hpp"
#include "pmh/rng.hpp"
#include "pmh/time_series.hpp"

namespace pmh {

struct LgssParameters {
  double phi = 0.0;      // state persistence, stable iff |phi| < 1
  double sigma_v = 1.0;  // state-noise standard deviation
  double sigma_e = 1.0;  // observation-noise standard deviation

  bool valid() const {
    return std::isfinite(phi) && std::abs(phi) < 1.0 && std::isfinite(sigma_v) &&
           sigma_v > 0.0 && std::isfinite(sigma_e) && sigma_e > 0.0;
  }
};

inline TimeSeries simulate_lgss(const LgssParameters& params, int horizon, double x0,
                                RngStream& rng) {
  if (!params.valid()) throw ParameterDomainError("simulate_lgss: invalid parameters");
  if (horizon < 1) throw ParameterDomainError("simulate_lgss: horizon must be >= 1");

  std::vector<double> x(static_cast<std::size_t>(horizon) + 1);
  std::vector<double> y(static_cast<std::size_t>(horizon));
  x[0] = x0;
  for (int t = 1; t <= horizon; ++t) {
    x[t] = params.phi * x[t - 1] + params.sigma_v * rng.normal();
    y[t - 1] = x[t] + params.sigma_e * rng.normal();
  }

  TimeSeries series;
  series.observations = std::move(y);
  series.states = std::move(x);
  series.initial_state = x0;
  return series;
}

/// Log density of the Gaussian prior on phi truncated to (-1, 1), up to the
/// truncation constant (which cancels in acceptance ratios). The default is
/// a zero-mean Gaussian with variance 0.5; both hyperparameters are
/// configurable.
inline double log_prior_lgss(double phi, double mean = 0.0, double variance = 0.5) {
  if (!std::isfinite(phi) || std::abs(phi) >= 1.0) return kNegInf;
  return gaussian_log_density(phi, mean, variance);
}

}  // namespace pmh
