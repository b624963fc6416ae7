#pragma once

// Exact filtering for the scalar LGSS model; the initial state is a point
// mass at x0. Serves as the reference against which the particle filter's
// state estimates and likelihood are validated.

#include <vector>

#include "pmh/densities.hpp"
#include "pmh/errors.hpp"
#include "pmh/lgss.hpp"
#include "pmh/time_series.hpp"

namespace pmh {

struct KalmanOutput {
  std::vector<double> filtered_means;      // E[x_t | y_{1:t}], t = 1..T
  std::vector<double> filtered_variances;  // Var[x_t | y_{1:t}], t = 1..T
  double log_likelihood = 0.0;             // log p(y_{1:T}), nats
};

inline KalmanOutput kalman_filter(const TimeSeries& data, const LgssParameters& params,
                                  double x0) {
  if (!params.valid()) throw ParameterDomainError("kalman_filter: invalid parameters");

  const int horizon = data.length();
  const double var_v = params.sigma_v * params.sigma_v;
  const double var_e = params.sigma_e * params.sigma_e;

  KalmanOutput out;
  out.filtered_means.reserve(horizon);
  out.filtered_variances.reserve(horizon);

  double mean = x0;
  double var = 0.0;
  for (int t = 0; t < horizon; ++t) {
    const double pred_mean = params.phi * mean;
    const double pred_var = params.phi * params.phi * var + var_v;
    const double innovation_var = pred_var + var_e;
    out.log_likelihood += gaussian_log_density(data.observations[t], pred_mean, innovation_var);

    const double gain = pred_var / innovation_var;
    mean = pred_mean + gain * (data.observations[t] - pred_mean);
    var = pred_var * (1.0 - gain);
    out.filtered_means.push_back(mean);
    out.filtered_variances.push_back(var);
  }
  return out;
}

}  // namespace pmh
