#pragma once

// Stochastic volatility model
//
//   x_0       ~ N(mu, sigma_v^2 / (1 - phi^2)),
//   x_t | x_{t-1} ~ N(mu + phi (x_{t-1} - mu), sigma_v^2),
//   y_t | x_t ~ N(0, exp(x_t)).
//
// The state x_t is the log-volatility: exp(x_t / 2) is the observation
// standard deviation. Observations are log-returns.

#include <cmath>
#include <vector>

#include "pmh/densities.hpp"
#include "pmh/errors.hpp"
#include "pmh/rng.hpp"
#include "pmh/time_series.hpp"

namespace pmh {

struct SvParameters {
  double mu = 0.0;       // log-volatility mean level
  double phi = 0.95;     // persistence, stable iff |phi| < 1
  double sigma_v = 0.2;  // state-noise standard deviation

  bool valid() const {
    return std::isfinite(mu) && std::isfinite(phi) && std::abs(phi) < 1.0 &&
           std::isfinite(sigma_v) && sigma_v > 0.0;
  }
};

/// The same parameters mapped to the real line: phi = tanh(psi),
/// sigma_v = exp(varsigma), mu unchanged.
struct UnconstrainedSvParameters {
  double mu = 0.0;
  double psi = 0.0;
  double varsigma = 0.0;
};

inline UnconstrainedSvParameters to_unconstrained(const SvParameters& params) {
  if (!params.valid())
    throw ParameterDomainError("to_unconstrained: parameters outside the constrained domain");
  return {params.mu, std::atanh(params.phi), std::log(params.sigma_v)};
}

inline SvParameters from_unconstrained(const UnconstrainedSvParameters& uparams) {
  return {uparams.mu, std::tanh(uparams.psi), std::exp(uparams.varsigma)};
}

/// log |dtheta/dvartheta|(proposed) - log |dtheta/dvartheta|(current), the
/// correction added to the log acceptance ratio when the chain walks in the
/// unconstrained parametrisation:
///
///   log(1 - phi'^2) - log(1 - phi^2) + log(sigma_v') - log(sigma_v).
inline double log_jacobian_correction(const SvParameters& current,
                                      const SvParameters& proposed) {
  if (!current.valid() || !proposed.valid())
    throw ParameterDomainError("log_jacobian_correction: invalid parameters");
  return std::log1p(-proposed.phi * proposed.phi) - std::log1p(-current.phi * current.phi) +
         std::log(proposed.sigma_v) - std::log(current.sigma_v);
}

/// log g(y | x) = log N(y; 0, exp(x)), written so that a large |x| saturates
/// to -inf instead of producing NaN through exp overflow.
inline double sv_log_observation_density(double y, double x) {
  if (!std::isfinite(y) || !std::isfinite(x)) return kNegInf;
  const double y2 = y * y;
  const double quad = y2 == 0.0 ? 0.0 : y2 * std::exp(-x);
  return -0.5 * (kLogTwoPi + x + quad);
}

inline TimeSeries simulate_sv(const SvParameters& params, int horizon, RngStream& rng) {
  if (!params.valid()) throw ParameterDomainError("simulate_sv: invalid parameters");
  if (horizon < 1) throw ParameterDomainError("simulate_sv: horizon must be >= 1");

  std::vector<double> x(static_cast<std::size_t>(horizon) + 1);
  std::vector<double> y(static_cast<std::size_t>(horizon));
  const double stationary_std = params.sigma_v / std::sqrt(1.0 - params.phi * params.phi);
  x[0] = rng.normal(params.mu, stationary_std);
  for (int t = 1; t <= horizon; ++t) {
    x[t] = params.mu + params.phi * (x[t - 1] - params.mu) + params.sigma_v * rng.normal();
    y[t - 1] = std::exp(0.5 * x[t]) * rng.normal();
  }

  TimeSeries series;
  series.initial_state = x[0];
  series.observations = std::move(y);
  series.states = std::move(x);
  return series;
}

/// Log prior density, up to the truncation constant of the phi term:
/// mu ~ N(0, 1), phi ~ N(0.95, 0.05^2) truncated to [-1, 1],
/// sigma_v ~ Gamma(shape 2, rate 10). Returns -inf outside the support.
inline double log_prior_sv(const SvParameters& params) {
  if (!params.valid()) return kNegInf;
  return gaussian_log_density(params.mu, 0.0, 1.0) +
         gaussian_log_density(params.phi, 0.95, 0.05 * 0.05) +
         gamma_log_density(params.sigma_v, 2.0, 10.0);
}

}  // namespace pmh
