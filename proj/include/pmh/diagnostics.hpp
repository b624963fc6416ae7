#pragma once

// Post-processing of chains and filter runs: autocorrelation and IACT,
// posterior summaries, error metrics against a reference filter, a
// Kolmogorov-Smirnov stationarity check with thinning, and the study of the
// log-likelihood standard deviation as a function of the particle count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pmh/errors.hpp"
#include "pmh/rng.hpp"
#include "pmh/sampler.hpp"

namespace pmh {

struct IactEstimate {
  double iact = 1.0;
  std::vector<double> acf;  // lags 1..L
};

/// Truncated-sum IACT estimator: 1 + 2 sum_{tau=1..L} rho_tau, with the
/// autocovariances normalised by the full length (biased estimator, stable
/// at large lags).
inline IactEstimate estimate_iact(std::span<const double> chain, int lag_cutoff) {
  const int n = static_cast<int>(chain.size());
  if (lag_cutoff < 1) throw std::invalid_argument("estimate_iact: lag cutoff must be >= 1");
  if (n <= lag_cutoff + 1)
    throw DiagnosticsError("estimate_iact: sequence shorter than the lag cutoff");

  double mean = 0.0;
  for (double x : chain) mean += x;
  mean /= n;

  double c0 = 0.0;
  for (double x : chain) c0 += (x - mean) * (x - mean);
  c0 /= n;
  if (!(c0 > 0.0) || !std::isfinite(c0))
    throw DiagnosticsError("estimate_iact: sequence has no variance");

  IactEstimate result;
  result.acf.resize(lag_cutoff);
  double sum = 0.0;
  for (int tau = 1; tau <= lag_cutoff; ++tau) {
    double c = 0.0;
    for (int k = 0; k + tau < n; ++k) c += (chain[k] - mean) * (chain[k + tau] - mean);
    const double rho = c / n / c0;
    result.acf[tau - 1] = rho;
    sum += rho;
  }
  result.iact = 1.0 + 2.0 * sum;
  return result;
}

/// Smallest lag with autocorrelation below `threshold`, capped at `max_lag`.
inline int suggest_thinning_lag(std::span<const double> chain, double threshold = 0.05,
                                int max_lag = 100) {
  const int usable = std::min<int>(max_lag, static_cast<int>(chain.size()) - 2);
  if (usable < 1) throw DiagnosticsError("suggest_thinning_lag: sequence too short");
  const IactEstimate est = estimate_iact(chain, usable);
  for (int tau = 1; tau <= usable; ++tau) {
    if (est.acf[tau - 1] < threshold) return tau;
  }
  return max_lag;
}

struct MixingReport {
  std::vector<std::vector<double>> acf;  // per parameter, lags 1..L
  std::vector<double> iact;              // per parameter
  int lag_cutoff = 0;
  double acceptance_rate = 0.0;
};

inline MixingReport mixing_report(const ChainTrace& trace, int burn_in, int lag_cutoff = 100) {
  if (burn_in < 0 || burn_in >= trace.iterations())
    throw DiagnosticsError("mixing_report: burn-in exceeds the trace length");
  MixingReport report;
  report.lag_cutoff = lag_cutoff;
  report.acceptance_rate = trace.acceptance_rate();
  const int rows = trace.iterations() - burn_in;
  for (int j = 0; j < trace.dimension(); ++j) {
    const Eigen::VectorXd column = trace.parameters.col(j).tail(rows);
    IactEstimate est = estimate_iact({column.data(), static_cast<std::size_t>(rows)}, lag_cutoff);
    report.iact.push_back(est.iact);
    report.acf.push_back(std::move(est.acf));
  }
  return report;
}

struct PosteriorSummary {
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> std;
  std::vector<std::pair<double, double>> credible_interval_95;  // 2.5%..97.5%
};

namespace detail {

inline double percentile(std::vector<double>& sorted, double p) {
  const double h = (sorted.size() - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - lo;
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

/// Per-parameter mean, sample variance, standard deviation and 95% credible
/// interval over the post-burn-in rows.
inline PosteriorSummary posterior_summary(const ChainTrace& trace, int burn_in) {
  const int K = trace.iterations();
  if (burn_in < 0 || burn_in >= K)
    throw DiagnosticsError("posterior_summary: no rows after burn-in");
  const int rows = K - burn_in;

  PosteriorSummary summary;
  for (int j = 0; j < trace.dimension(); ++j) {
    const Eigen::VectorXd column = trace.parameters.col(j).tail(rows);
    const double mean = column.mean();
    double var = 0.0;
    if (rows > 1) var = (column.array() - mean).square().sum() / (rows - 1);
    summary.mean.push_back(mean);
    summary.variance.push_back(var);
    summary.std.push_back(std::sqrt(var));

    std::vector<double> sorted(column.data(), column.data() + rows);
    std::sort(sorted.begin(), sorted.end());
    summary.credible_interval_95.emplace_back(detail::percentile(sorted, 0.025),
                                              detail::percentile(sorted, 0.975));
  }
  return summary;
}

struct StateErrorMetrics {
  double log_bias;  // log of (1/T) sum |pf_t - ref_t|
  double log_mse;   // log of (1/T) sum (pf_t - ref_t)^2
};

/// Natural logs of the average absolute error and average squared error of
/// a filter's state estimates against a reference. Exact-zero averages are
/// reported as the floor -745 so downstream files stay numeric.
inline StateErrorMetrics state_error_metrics(std::span<const double> pf_states,
                                             std::span<const double> reference_states) {
  if (pf_states.size() != reference_states.size())
    throw std::invalid_argument("state_error_metrics: length mismatch");
  if (pf_states.empty()) throw std::invalid_argument("state_error_metrics: empty input");

  constexpr double kLogFloor = -745.0;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t t = 0; t < pf_states.size(); ++t) {
    const double d = pf_states[t] - reference_states[t];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double bias = abs_sum / pf_states.size();
  const double mse = sq_sum / pf_states.size();
  return {bias > 0.0 ? std::max(std::log(bias), kLogFloor) : kLogFloor,
          mse > 0.0 ? std::max(std::log(mse), kLogFloor) : kLogFloor};
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

struct KsTestResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  bool pass = false;
};

/// Splits the post-burn-in chain into two equal halves, thins each by
/// keeping every `thinning_lag`-th sample and compares the halves with a
/// two-sample KS test at level `alpha` (asymptotic critical value
/// c(alpha) sqrt((n+m)/(nm)) with c(alpha) = sqrt(-log(alpha/2)/2)).
/// Passing supports that the chain is stationary after the burn-in.
inline KsTestResult ks_stationarity_test(std::span<const double> chain, int burn_in,
                                         int thinning_lag, double alpha = 0.05) {
  if (thinning_lag < 1)
    throw std::invalid_argument("ks_stationarity_test: thinning lag must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("ks_stationarity_test: alpha must lie in (0, 1)");
  if (burn_in < 0 || burn_in >= static_cast<int>(chain.size()))
    throw DiagnosticsError("ks_stationarity_test: no samples after burn-in");

  const auto post = chain.subspan(burn_in);
  const std::size_t half = post.size() / 2;
  std::vector<double> a, b;
  for (std::size_t k = 0; k < half; k += thinning_lag) a.push_back(post[k]);
  for (std::size_t k = half; k < 2 * half; k += thinning_lag) b.push_back(post[k]);
  if (a.size() < 20 || b.size() < 20)
    throw DiagnosticsError("ks_stationarity_test: fewer than 20 thinned samples per half");

  KsTestResult result;
  result.statistic = ks_two_sample_statistic(a, b);
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  result.critical_value =
      std::sqrt(-0.5 * std::log(alpha / 2.0)) * std::sqrt((n + m) / (n * m));
  result.pass = result.statistic < result.critical_value;
  return result;
}

struct LoglikStdEntry {
  int num_particles = 0;
  double std_log_likelihood = 0.0;
  int failed_runs = 0;
};

/// Sample standard deviation of the log-likelihood estimate over seeded
/// runs, for every particle count in the grid. `estimator` receives the
/// particle count and a dedicated stream; runs that throw DegeneracyError
/// are excluded and counted.
inline std::vector<LoglikStdEntry> loglik_std_study(
    const std::function<double(int, RngStream&)>& estimator, std::span<const int> particle_grid,
    int runs, std::uint64_t seed = 0) {
  if (runs < 2) throw std::invalid_argument("loglik_std_study: need at least two runs");
  if (particle_grid.empty()) throw std::invalid_argument("loglik_std_study: empty grid");

  std::vector<LoglikStdEntry> table;
  for (std::size_t g = 0; g < particle_grid.size(); ++g) {
    LoglikStdEntry entry;
    entry.num_particles = particle_grid[g];
    std::vector<double> values;
    values.reserve(runs);
    for (int r = 0; r < runs; ++r) {
      RngStream stream(seed, static_cast<std::uint64_t>(g) * runs + r);
      try {
        values.push_back(estimator(particle_grid[g], stream));
      } catch (const DegeneracyError&) {
        ++entry.failed_runs;
      }
    }
    if (values.size() < 2)
      throw DiagnosticsError("loglik_std_study: fewer than two successful runs");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= (values.size() - 1);
    entry.std_log_likelihood = std::sqrt(var);
    table.push_back(entry);
  }
  return table;
}

}  // namespace pmh
