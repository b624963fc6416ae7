#pragma once

// Particle Metropolis-Hastings with Gaussian random-walk proposals.
//
// The chain state is a parameter vector; the likelihood is a stochastic
// estimate produced by a particle filter that consumes one fresh random
// stream per candidate (the auxiliary variables of the pseudo-marginal
// construction). The accepted candidate's likelihood estimate is stored and
// reused, never recomputed.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "pmh/densities.hpp"
#include "pmh/errors.hpp"
#include "pmh/kalman.hpp"
#include "pmh/lgss.hpp"
#include "pmh/particle_filter.hpp"
#include "pmh/rng.hpp"
#include "pmh/sv.hpp"
#include "pmh/time_series.hpp"

namespace pmh {

/// Covariance scaling 2.562^2 / d for a d-dimensional random walk shaped by
/// an estimated posterior covariance.
inline double proposal_scale_rule(int dimension) { return 2.562 * 2.562 / dimension; }

/// Gaussian random-walk proposal: a scalar step size or a full covariance,
/// optionally rescaled by proposal_scale_rule, optionally operating on the
/// unconstrained parametrisation of the model.
struct ProposalConfig {
  enum class Kind { scalar_random_walk, multivariate_random_walk };

  Kind kind = Kind::scalar_random_walk;
  double step_size = 0.1;      // scalar kind
  Eigen::MatrixXd covariance;  // multivariate kind
  bool apply_scale_rule = false;
  bool reparametrized = false;

  static ProposalConfig scalar(double step_size) {
    ProposalConfig config;
    config.kind = Kind::scalar_random_walk;
    config.step_size = step_size;
    config.validate();
    return config;
  }

  static ProposalConfig multivariate(Eigen::MatrixXd covariance, bool apply_scale_rule = false) {
    ProposalConfig config;
    config.kind = Kind::multivariate_random_walk;
    config.covariance = std::move(covariance);
    config.apply_scale_rule = apply_scale_rule;
    config.validate();
    return config;
  }

  int dimension() const {
    return kind == Kind::scalar_random_walk ? 1 : static_cast<int>(covariance.rows());
  }

  /// Covariance actually used to draw increments.
  Eigen::MatrixXd effective_covariance() const {
    if (kind == Kind::scalar_random_walk)
      return Eigen::MatrixXd::Constant(1, 1, step_size * step_size);
    return apply_scale_rule ? (proposal_scale_rule(dimension()) * covariance).eval()
                            : covariance;
  }

  void validate() const {
    if (kind == Kind::scalar_random_walk) {
      if (!(step_size >= 0.0) || !std::isfinite(step_size))
        throw ConfigurationError("proposal: step_size must be a finite non-negative real");
      return;
    }
    if (covariance.rows() == 0 || covariance.rows() != covariance.cols())
      throw ConfigurationError("proposal: covariance must be square and non-empty");
    if (!covariance.allFinite())
      throw ConfigurationError("proposal: covariance has non-finite entries");
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ConfigurationError("proposal: covariance must be symmetric within 1e-12");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(covariance,
                                                        Eigen::EigenvaluesOnly);
    if (eigs.eigenvalues().minCoeff() <= 0.0)
      throw ConfigurationError("proposal: covariance must be positive definite");
  }
};

/// Symmetric random-walk draw: candidate = current + N(0, effective covariance).
inline Eigen::VectorXd propose(const Eigen::VectorXd& current, const ProposalConfig& config,
                               RngStream& rng) {
  if (config.kind == ProposalConfig::Kind::scalar_random_walk) {
    if (current.size() != 1)
      throw ConfigurationError("propose: scalar proposal applied to a non-scalar state");
    Eigen::VectorXd candidate(1);
    candidate[0] = current[0] + config.step_size * rng.normal();
    return candidate;
  }
  const int d = config.dimension();
  if (current.size() != d)
    throw ConfigurationError("propose: state dimension does not match the covariance");
  const Eigen::MatrixXd root = config.effective_covariance().llt().matrixL();
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  return current + root * z;
}

/// Log MH ratio for a symmetric proposal:
/// (log p(theta') - log p(theta)) + (loglik' - loglik) + Jacobian correction.
/// A candidate outside the prior support gives -inf.
inline double log_acceptance_ratio(double candidate_log_prior, double current_log_prior,
                                   double candidate_log_likelihood,
                                   double current_log_likelihood, double log_jacobian = 0.0) {
  if (candidate_log_prior == kNegInf) return kNegInf;
  return (candidate_log_prior - current_log_prior) +
         (candidate_log_likelihood - current_log_likelihood) + log_jacobian;
}

/// min{1, exp(log_ratio)}.
inline double acceptance_probability(double log_ratio) {
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

struct ChainConfig {
  int iterations = 5000;  // K, counting the initial state as row 0
  int burn_in = 1000;     // K_b, retained in the trace, excluded by summaries
  int particles = 100;    // N per likelihood evaluation
  Eigen::VectorXd initial_parameters;
  std::uint64_t seed = 0;

  void validate(int dimension) const {
    if (iterations < 1) throw ConfigurationError("chain: iterations must be >= 1");
    if (burn_in < 0 || burn_in >= iterations)
      throw ConfigurationError("chain: burn_in must satisfy 0 <= burn_in < iterations");
    if (particles < 1) throw ConfigurationError("chain: particles must be >= 1");
    if (initial_parameters.size() != dimension)
      throw ConfigurationError("chain: initial parameter dimension mismatch");
  }
};

/// One realisation of the Markov chain. Row k of `parameters` is theta^(k)
/// in the model parametrisation (mapped back if the chain walked in the
/// unconstrained one). A rejected iteration copies row k-1 exactly.
struct ChainTrace {
  Eigen::MatrixXd parameters;  // K x p
  std::vector<double> log_likelihoods;
  std::vector<std::uint8_t> accepted;
  std::optional<Eigen::MatrixXd> state_trajectories;  // K x (T+1)

  int iterations() const { return static_cast<int>(parameters.rows()); }
  int dimension() const { return static_cast<int>(parameters.cols()); }

  /// Fraction of accepted proposals among iterations 1..K-1.
  double acceptance_rate() const {
    if (accepted.size() <= 1) return 0.0;
    double count = 0.0;
    for (std::size_t k = 1; k < accepted.size(); ++k) count += accepted[k];
    return count / static_cast<double>(accepted.size() - 1);
  }
};

/// Likelihood estimate for one candidate, plus the sampled state trajectory
/// when the estimator provides one.
struct LikelihoodEvaluation {
  double log_likelihood = 0.0;
  std::vector<double> trajectory;
};

/// A posterior target: prior, stochastic likelihood estimator and, when the
/// chain runs in transformed coordinates, the coordinate maps and Jacobian
/// correction. The estimator receives a fresh stream per call and may throw
/// DegeneracyError, which the sampler turns into a rejection.
struct PmhTarget {
  int dimension = 0;
  std::function<double(const Eigen::VectorXd&)> log_prior;
  std::function<LikelihoodEvaluation(const Eigen::VectorXd&, RngStream&)> log_likelihood;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> to_chain_coordinates;    // theta -> c
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> from_chain_coordinates;  // c -> theta
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      log_jacobian;  // (current theta, candidate theta)
};

/// Runs the Metropolis-Hastings recursion. Stream 0 of config.seed drives
/// the proposal and accept/reject draws; stream 1 + k evaluates the
/// candidate of iteration k, so a run is reproducible from (data, config,
/// seed) alone.
inline ChainTrace run_chain(const PmhTarget& target, const ChainConfig& config,
                            const ProposalConfig& proposal) {
  proposal.validate();
  config.validate(target.dimension);
  if (proposal.dimension() != target.dimension)
    throw ConfigurationError("run_chain: proposal dimension does not match the target");

  const int K = config.iterations;
  const int p = target.dimension;
  const bool transformed =
      static_cast<bool>(target.from_chain_coordinates) &&
      static_cast<bool>(target.to_chain_coordinates);

  RngStream chain_stream(config.seed, 0);

  Eigen::VectorXd current_theta = config.initial_parameters;
  double current_log_prior = target.log_prior(current_theta);
  if (current_log_prior == kNegInf)
    throw ConfigurationError("run_chain: initial parameters outside the prior support");
  Eigen::VectorXd current_coords =
      transformed ? target.to_chain_coordinates(current_theta) : current_theta;

  LikelihoodEvaluation current_eval;
  {
    RngStream filter_stream(config.seed, 1);
    try {
      current_eval = target.log_likelihood(current_theta, filter_stream);
    } catch (const DegeneracyError& e) {
      throw ConfigurationError(std::string("run_chain: filter degenerated at the initial "
                                           "parameters: ") +
                               e.what());
    }
  }

  ChainTrace trace;
  trace.parameters.resize(K, p);
  trace.log_likelihoods.assign(K, 0.0);
  trace.accepted.assign(K, 0);
  const bool store_trajectories = !current_eval.trajectory.empty();
  if (store_trajectories)
    trace.state_trajectories.emplace(K, static_cast<int>(current_eval.trajectory.size()));

  auto record = [&](int k) {
    trace.parameters.row(k) = current_theta;
    trace.log_likelihoods[k] = current_eval.log_likelihood;
    if (store_trajectories)
      trace.state_trajectories->row(k) = Eigen::Map<const Eigen::RowVectorXd>(
          current_eval.trajectory.data(), current_eval.trajectory.size());
  };

  trace.accepted[0] = 1;
  record(0);

  for (int k = 1; k < K; ++k) {
    const Eigen::VectorXd candidate_coords = propose(current_coords, proposal, chain_stream);
    const Eigen::VectorXd candidate_theta =
        transformed ? target.from_chain_coordinates(candidate_coords) : candidate_coords;
    const double candidate_log_prior = target.log_prior(candidate_theta);

    double log_ratio = kNegInf;
    LikelihoodEvaluation candidate_eval;
    if (candidate_log_prior > kNegInf) {
      // The filter only runs for candidates inside the support.
      RngStream filter_stream(config.seed, static_cast<std::uint64_t>(1) + k);
      try {
        candidate_eval = target.log_likelihood(candidate_theta, filter_stream);
        const double jacobian =
            target.log_jacobian ? target.log_jacobian(current_theta, candidate_theta) : 0.0;
        log_ratio = log_acceptance_ratio(candidate_log_prior, current_log_prior,
                                         candidate_eval.log_likelihood,
                                         current_eval.log_likelihood, jacobian);
      } catch (const DegeneracyError&) {
        log_ratio = kNegInf;
      }
    }

    const double u = chain_stream.uniform();
    if (u < acceptance_probability(log_ratio)) {
      current_coords = candidate_coords;
      current_theta = candidate_theta;
      current_log_prior = candidate_log_prior;
      current_eval = std::move(candidate_eval);
      trace.accepted[k] = 1;
    }
    record(k);
  }
  return trace;
}

struct LgssPmhOptions {
  double sigma_v = 1.0;  // fixed state-noise standard deviation
  double sigma_e = 0.1;  // fixed observation-noise standard deviation
  double x0 = 0.0;
  double prior_mean = 0.0;
  double prior_variance = 0.5;
};

/// PMH for the scalar LGSS problem: the chain targets the posterior of phi
/// with {sigma_v, sigma_e} held fixed; the likelihood comes from the
/// fully-adapted filter.
inline ChainTrace run_pmh_lgss(const TimeSeries& data, const ChainConfig& config,
                               const ProposalConfig& proposal, const LgssPmhOptions& options) {
  if (data.length() < 1) throw ConfigurationError("run_pmh_lgss: empty dataset");
  if (proposal.reparametrized)
    throw ConfigurationError("run_pmh_lgss: no unconstrained parametrisation for this chain");

  PmhTarget target;
  target.dimension = 1;
  target.log_prior = [options](const Eigen::VectorXd& theta) {
    return log_prior_lgss(theta[0], options.prior_mean, options.prior_variance);
  };
  target.log_likelihood = [&data, options, n = config.particles](
                              const Eigen::VectorXd& theta, RngStream& rng) {
    const LgssParameters params{theta[0], options.sigma_v, options.sigma_e};
    FilterOutput out = fapf_lgss(data, params, n, options.x0, rng);
    return LikelihoodEvaluation{out.log_likelihood, {}};
  };
  return run_chain(target, config, proposal);
}

/// PMH for the three-parameter SV problem (mu, phi, sigma_v); the likelihood
/// comes from the bootstrap filter, which also supplies the sampled state
/// trajectory stored with each iteration. With proposal.reparametrized the
/// chain walks in (mu, artanh phi, log sigma_v) and the acceptance ratio
/// carries the Jacobian correction; the trace still reports theta.
inline ChainTrace run_pmh_sv(const TimeSeries& data, const ChainConfig& config,
                             const ProposalConfig& proposal) {
  if (data.length() < 1) throw ConfigurationError("run_pmh_sv: empty dataset");

  const auto as_params = [](const Eigen::VectorXd& theta) {
    return SvParameters{theta[0], theta[1], theta[2]};
  };

  PmhTarget target;
  target.dimension = 3;
  target.log_prior = [as_params](const Eigen::VectorXd& theta) {
    return log_prior_sv(as_params(theta));
  };
  target.log_likelihood = [&data, as_params, n = config.particles](
                              const Eigen::VectorXd& theta, RngStream& rng) {
    FilterOutput out = bpf_sv(data, as_params(theta), n, rng);
    return LikelihoodEvaluation{out.log_likelihood, std::move(*out.sampled_trajectory)};
  };
  if (proposal.reparametrized) {
    target.to_chain_coordinates = [as_params](const Eigen::VectorXd& theta) {
      const UnconstrainedSvParameters u = to_unconstrained(as_params(theta));
      return Eigen::Vector3d{u.mu, u.psi, u.varsigma};
    };
    target.from_chain_coordinates = [](const Eigen::VectorXd& coords) {
      const SvParameters params =
          from_unconstrained(UnconstrainedSvParameters{coords[0], coords[1], coords[2]});
      return Eigen::Vector3d{params.mu, params.phi, params.sigma_v};
    };
    target.log_jacobian = [as_params](const Eigen::VectorXd& current,
                                      const Eigen::VectorXd& candidate) {
      return log_jacobian_correction(as_params(current), as_params(candidate));
    };
  }
  return run_chain(target, config, proposal);
}

/// Sample covariance of the post-burn-in parameter rows, floored so the
/// result stays positive definite: when the smallest eigenvalue falls below
/// 1e-10 times the covariance trace, that floor is added to the diagonal.
inline Eigen::MatrixXd estimate_preconditioner(const ChainTrace& trace, int burn_in) {
  const int K = trace.iterations();
  const int p = trace.dimension();
  if (burn_in < 0 || K - burn_in <= p + 1)
    throw DiagnosticsError("estimate_preconditioner: need more than dim + 1 rows after burn-in");

  const auto block = trace.parameters.bottomRows(K - burn_in);
  const Eigen::RowVectorXd mean = block.colwise().mean();
  const Eigen::MatrixXd centered = block.rowwise() - mean;
  Eigen::MatrixXd covariance =
      centered.transpose() * centered / static_cast<double>(K - burn_in - 1);

  const double total = covariance.trace();
  if (!(total > 0.0))
    throw DiagnosticsError("estimate_preconditioner: post-burn-in chain is constant");
  const double floor = 1e-10 * total;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(covariance, Eigen::EigenvaluesOnly);
  if (eigs.eigenvalues().minCoeff() < floor)
    covariance += floor * Eigen::MatrixXd::Identity(p, p);
  return covariance;
}

}  // namespace pmh
