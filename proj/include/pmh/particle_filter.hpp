#pragma once

// Sequential Monte Carlo filters with multinomial resampling at every step.
//
// Time indexing: column t of the particle system holds x_t for t = 0..T and
// observations are y_1..y_T (stored zero-based, so y_t == observations[t-1]).
// Column 0 holds the initial particles; the weight column at time t contains
// the weights used to resample the ancestors of the time-t+1 particles.
//
// For the fully-adapted LGSS filter the time-t weight is p(y_{t+1} | x_t),
// so the p(y_1) factor of the likelihood comes from the deterministic
// initial particles and the accumulated estimate covers
// p(y_1) p(y_2 | y_1) ... p(y_T | y_{1:T-1}). The final weight column is
// uniform. For the bootstrap SV filter the time-t weight is g(y_t | x_t)
// and the initial column is uniform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmh/densities.hpp"
#include "pmh/errors.hpp"
#include "pmh/lgss.hpp"
#include "pmh/rng.hpp"
#include "pmh/sv.hpp"
#include "pmh/time_series.hpp"

namespace pmh {

/// Full history of one filter run. All four arrays are N x (T+1), stored
/// contiguously one time column after another. log_weights holds the
/// shifted log-weights (column maximum subtracted, so each column's maximum
/// is zero wherever the column carries real weights).
struct ParticleSystem {
  int num_particles = 0;
  int horizon = 0;  // T
  std::vector<double> particles;
  std::vector<double> log_weights;
  std::vector<double> normalized_weights;
  std::vector<std::int32_t> ancestor_indices;

  ParticleSystem() = default;
  ParticleSystem(int n, int T)
      : num_particles(n),
        horizon(T),
        particles(static_cast<std::size_t>(n) * (T + 1)),
        log_weights(static_cast<std::size_t>(n) * (T + 1)),
        normalized_weights(static_cast<std::size_t>(n) * (T + 1)),
        ancestor_indices(static_cast<std::size_t>(n) * (T + 1)) {}

  std::size_t offset(int t) const { return static_cast<std::size_t>(t) * num_particles; }

  std::span<double> particles_at(int t) { return {particles.data() + offset(t), size()}; }
  std::span<const double> particles_at(int t) const {
    return {particles.data() + offset(t), size()};
  }
  std::span<double> log_weights_at(int t) { return {log_weights.data() + offset(t), size()}; }
  std::span<const double> log_weights_at(int t) const {
    return {log_weights.data() + offset(t), size()};
  }
  std::span<double> weights_at(int t) { return {normalized_weights.data() + offset(t), size()}; }
  std::span<const double> weights_at(int t) const {
    return {normalized_weights.data() + offset(t), size()};
  }
  std::span<std::int32_t> ancestors_at(int t) {
    return {ancestor_indices.data() + offset(t), size()};
  }
  std::span<const std::int32_t> ancestors_at(int t) const {
    return {ancestor_indices.data() + offset(t), size()};
  }

  double particle(int i, int t) const { return particles[offset(t) + i]; }
  std::int32_t ancestor(int i, int t) const { return ancestor_indices[offset(t) + i]; }

private:
  std::size_t size() const { return static_cast<std::size_t>(num_particles); }
};

struct FilterOutput {
  std::vector<double> state_estimates;  // x-hat_0..x-hat_T
  double log_likelihood = 0.0;          // log p-hat(y_{1:T}), nats
  std::optional<std::vector<double>> sampled_trajectory;  // x_0..x_T
  ParticleSystem system;
};

/// Result of shifting and normalising one column of log-weights.
struct WeightNormalization {
  std::vector<double> weights;  // sums to one
  double max_log_weight;
  double sum_shifted;  // sum of exp(shifted log-weights), >= 1
};

namespace detail {

/// Shifts `log_weights` by its maximum in place and writes the normalised
/// weights to `out`. Throws DegeneracyError when no finite entry remains.
struct ShiftSummary {
  double max_log_weight;
  double sum_shifted;
};

inline ShiftSummary shift_and_normalize(std::span<double> log_weights, std::span<double> out,
                                        int step = -1) {
  double max_lw = kNegInf;
  for (double lw : log_weights) {
    if (std::isnan(lw)) throw DegeneracyError("particle weights contain NaN", step);
    max_lw = std::max(max_lw, lw);
  }
  if (max_lw == kNegInf)
    throw DegeneracyError("all particle weights underflowed to zero", step);

  double sum = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    log_weights[i] -= max_lw;
    out[i] = std::exp(log_weights[i]);
    sum += out[i];
  }
  for (double& w : out) w /= sum;
  return {max_lw, sum};
}

}  // namespace detail

/// Normalises a vector of (un-normalised) log-weights. The output is
/// invariant to adding a constant to every entry; the returned maximum and
/// shifted sum feed the log-likelihood recursion.
inline WeightNormalization normalize_log_weights(std::span<const double> log_weights) {
  if (log_weights.empty())
    throw std::invalid_argument("normalize_log_weights: empty weight vector");
  WeightNormalization result;
  std::vector<double> shifted(log_weights.begin(), log_weights.end());
  result.weights.resize(log_weights.size());
  const auto summary = detail::shift_and_normalize(shifted, result.weights);
  result.max_log_weight = summary.max_log_weight;
  result.sum_shifted = summary.sum_shifted;
  return result;
}

/// log((1/N) sum_i v_i), assembled from the shifted-weight summary:
/// v_max + log(sum of shifted weights) - log(N).
inline double log_likelihood_increment(double max_log_weight, double sum_shifted,
                                       int num_particles) {
  if (!(sum_shifted > 0.0))
    throw std::invalid_argument("log_likelihood_increment: shifted weight sum must be positive");
  return max_log_weight + std::log(sum_shifted) - std::log(static_cast<double>(num_particles));
}

/// N independent draws from the categorical distribution given by `weights`
/// (Walker alias method). Expects a normalised weight vector.
inline std::vector<std::int32_t> multinomial_resample(std::span<const double> weights,
                                                      RngStream& rng) {
  const int n = static_cast<int>(weights.size());
  if (n == 0) throw std::invalid_argument("multinomial_resample: empty weight vector");

  double sum = 0.0;
  for (double w : weights) {
    if (std::isnan(w)) throw DegeneracyError("multinomial_resample: NaN weight");
    if (w < 0.0) throw std::invalid_argument("multinomial_resample: negative weight");
    sum += w;
  }
  if (!(sum > 0.0)) throw DegeneracyError("multinomial_resample: weights sum to zero");
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("multinomial_resample: weights must sum to one");

  std::vector<double> threshold(n);
  std::vector<std::int32_t> alias(n, 0);
  std::vector<std::int32_t> small, large;
  small.reserve(n);
  large.reserve(n);
  for (int i = 0; i < n; ++i) {
    threshold[i] = weights[i] * n;
    (threshold[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::int32_t s = small.back();
    small.pop_back();
    const std::int32_t l = large.back();
    alias[s] = l;
    threshold[l] = (threshold[l] + threshold[s]) - 1.0;
    if (threshold[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Rounding leftovers: both stacks hold buckets with threshold ~= 1.
  for (std::int32_t s : small) threshold[s] = 1.0;
  for (std::int32_t l : large) threshold[l] = 1.0;

  std::vector<std::int32_t> draws(n);
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform() * n;
    int bucket = static_cast<int>(u);
    if (bucket >= n) bucket = n - 1;
    draws[k] = (u - bucket) < threshold[bucket] ? bucket : alias[bucket];
  }
  return draws;
}

/// Draws one trajectory x_0..x_T: samples the final index proportional to
/// the final weights, then follows the ancestor lineage back to t = 0.
inline std::vector<double> sample_trajectory(const ParticleSystem& system, RngStream& rng) {
  if (system.num_particles < 1)
    throw std::invalid_argument("sample_trajectory: empty particle system");
  const int T = system.horizon;

  const auto final_weights = system.weights_at(T);
  double sum = 0.0;
  for (double w : final_weights) {
    if (std::isnan(w)) throw DegeneracyError("sample_trajectory: NaN final weight", T);
    sum += w;
  }
  if (!(sum > 0.0)) throw DegeneracyError("sample_trajectory: degenerate final weights", T);

  const double target = rng.uniform() * sum;
  int index = system.num_particles - 1;
  double acc = 0.0;
  for (int i = 0; i < system.num_particles; ++i) {
    acc += final_weights[i];
    if (target < acc) {
      index = i;
      break;
    }
  }

  std::vector<double> path(static_cast<std::size_t>(T) + 1);
  for (int t = T; t >= 0; --t) {
    path[t] = system.particle(index, t);
    if (t > 0) index = system.ancestor(index, t);
  }
  return path;
}

/// Fully-adapted particle filter for the LGSS model. Propagation samples
/// from p(x_t | x_{t-1}, y_t) and weighting uses p(y_{t+1} | x_t), both in
/// closed form; the state estimate is the plain particle mean and the
/// likelihood estimator is unbiased.
inline FilterOutput fapf_lgss(const TimeSeries& data, const LgssParameters& params,
                              int num_particles, double x0, RngStream& rng) {
  if (!params.valid()) throw ParameterDomainError("fapf_lgss: invalid parameters");
  if (num_particles < 1) throw std::invalid_argument("fapf_lgss: need at least one particle");
  const int T = data.length();
  if (T < 1) throw std::invalid_argument("fapf_lgss: empty observation sequence");

  const auto& y = data.observations;
  const double inv_var_v = 1.0 / (params.sigma_v * params.sigma_v);
  const double inv_var_e = 1.0 / (params.sigma_e * params.sigma_e);
  const double proposal_var = 1.0 / (inv_var_v + inv_var_e);
  const double proposal_std = std::sqrt(proposal_var);
  const double predictive_var = params.sigma_v * params.sigma_v + params.sigma_e * params.sigma_e;
  const double log_norm = -0.5 * (kLogTwoPi + std::log(predictive_var));
  const double half_inv_pred = 0.5 / predictive_var;

  ParticleSystem system(num_particles, T);
  FilterOutput out;
  out.state_estimates.assign(static_cast<std::size_t>(T) + 1, 0.0);

  // t = 0: all particles sit at x0; their weight against y_1 makes the
  // first likelihood factor exact.
  {
    auto x_col = system.particles_at(0);
    std::fill(x_col.begin(), x_col.end(), x0);
    auto anc = system.ancestors_at(0);
    std::iota(anc.begin(), anc.end(), 0);
    auto lw = system.log_weights_at(0);
    const double d = y[0] - params.phi * x0;
    std::fill(lw.begin(), lw.end(), log_norm - d * d * half_inv_pred);
    const auto summary = detail::shift_and_normalize(lw, system.weights_at(0), 0);
    out.log_likelihood = log_likelihood_increment(summary.max_log_weight, summary.sum_shifted,
                                                  num_particles);
    out.state_estimates[0] = x0;
  }

  for (int t = 1; t <= T; ++t) {
    const auto ancestors = multinomial_resample(system.weights_at(t - 1), rng);
    std::copy(ancestors.begin(), ancestors.end(), system.ancestors_at(t).begin());

    const auto x_prev = system.particles_at(t - 1);
    auto x_cur = system.particles_at(t);
    const double drive = proposal_var * inv_var_e * y[t - 1];
    const double pull = proposal_var * inv_var_v * params.phi;
    double acc = 0.0;
    for (int i = 0; i < num_particles; ++i) {
      x_cur[i] = drive + pull * x_prev[ancestors[i]] + proposal_std * rng.normal();
      acc += x_cur[i];
    }
    out.state_estimates[t] = acc / num_particles;

    auto lw = system.log_weights_at(t);
    auto w = system.weights_at(t);
    if (t < T) {
      for (int i = 0; i < num_particles; ++i) {
        const double d = y[t] - params.phi * x_cur[i];
        lw[i] = log_norm - d * d * half_inv_pred;
      }
      const auto summary = detail::shift_and_normalize(lw, w, t);
      out.log_likelihood += log_likelihood_increment(summary.max_log_weight,
                                                     summary.sum_shifted, num_particles);
    } else {
      // No y_{T+1}: the fully-adapted particles at T carry uniform weights.
      std::fill(lw.begin(), lw.end(), 0.0);
      std::fill(w.begin(), w.end(), 1.0 / num_particles);
    }
  }

  out.system = std::move(system);
  return out;
}

/// Bootstrap particle filter for the SV model: proposes from the state
/// dynamics, weights with the observation density and estimates the state
/// by the weighted particle mean. Also samples one ancestral trajectory
/// from the finished system.
inline FilterOutput bpf_sv(const TimeSeries& data, const SvParameters& params,
                           int num_particles, RngStream& rng) {
  if (!params.valid()) throw ParameterDomainError("bpf_sv: invalid parameters");
  if (num_particles < 1) throw std::invalid_argument("bpf_sv: need at least one particle");
  const int T = data.length();
  if (T < 1) throw std::invalid_argument("bpf_sv: empty observation sequence");

  const auto& y = data.observations;
  const double stationary_std = params.sigma_v / std::sqrt(1.0 - params.phi * params.phi);

  ParticleSystem system(num_particles, T);
  FilterOutput out;
  out.state_estimates.assign(static_cast<std::size_t>(T) + 1, 0.0);

  {
    auto x_col = system.particles_at(0);
    double acc = 0.0;
    for (int i = 0; i < num_particles; ++i) {
      x_col[i] = params.mu + stationary_std * rng.normal();
      acc += x_col[i];
    }
    auto anc = system.ancestors_at(0);
    std::iota(anc.begin(), anc.end(), 0);
    auto lw = system.log_weights_at(0);
    std::fill(lw.begin(), lw.end(), 0.0);
    auto w = system.weights_at(0);
    std::fill(w.begin(), w.end(), 1.0 / num_particles);
    out.state_estimates[0] = acc / num_particles;
  }

  for (int t = 1; t <= T; ++t) {
    const auto ancestors = multinomial_resample(system.weights_at(t - 1), rng);
    std::copy(ancestors.begin(), ancestors.end(), system.ancestors_at(t).begin());

    const auto x_prev = system.particles_at(t - 1);
    auto x_cur = system.particles_at(t);
    for (int i = 0; i < num_particles; ++i) {
      x_cur[i] = params.mu + params.phi * (x_prev[ancestors[i]] - params.mu) +
                 params.sigma_v * rng.normal();
    }

    auto lw = system.log_weights_at(t);
    const double y_t = y[t - 1];
    for (int i = 0; i < num_particles; ++i) lw[i] = sv_log_observation_density(y_t, x_cur[i]);
    auto w = system.weights_at(t);
    const auto summary = detail::shift_and_normalize(lw, w, t);
    out.log_likelihood +=
        log_likelihood_increment(summary.max_log_weight, summary.sum_shifted, num_particles);

    double estimate = 0.0;
    for (int i = 0; i < num_particles; ++i) estimate += w[i] * x_cur[i];
    out.state_estimates[t] = estimate;
  }

  out.sampled_trajectory = sample_trajectory(system, rng);
  out.system = std::move(system);
  return out;
}

}  // namespace pmh
