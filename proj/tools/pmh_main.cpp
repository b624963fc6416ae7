// Command-line driver: data generation, filtering, PMH runs, proposal
// tuning, the particle-count study and trace diagnostics. Every command is
// deterministic for a fixed --seed; all output files use shortest
// round-trip number formatting.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "pmh/pmh.hpp"

namespace fs = std::filesystem;

namespace {

// Each subcommand owns one instance, so per-command defaults cannot leak
// into another command.
struct ExperimentConfig {
  std::string model = "lgss";
  int horizon = 250;
  int particles = 100;
  int iterations = 5000;
  int burn_in = 1000;
  double step_size = 0.10;
  std::vector<double> sv_steps = {0.10, 0.01, 0.05};
  std::string covariance_path;
  bool no_scale_rule = false;
  bool reparametrized = false;
  std::uint64_t seed = 0;
  std::string data_path;
  std::string out_path;
  int lags = 100;

  double phi = 0.75;
  double sigma_v = 1.0;
  double sigma_e = 0.1;
  double mu = 0.0;
  double x0 = 0.0;
  bool x0_given = false;

  double initial_phi = 0.5;
  std::vector<double> initial_sv = {0.0, 0.9, 0.2};
  double prior_mean = 0.0;
  double prior_variance = 0.5;

  double alpha = 0.05;
  int thinning = 0;  // 0 = pick from the ACF
  std::vector<int> grid = {50, 100, 200, 500};
  int runs = 1000;
  std::string trace_path;
};

std::string out_file(const ExperimentConfig& config, const std::string& name) {
  fs::create_directories(config.out_path);
  return (fs::path(config.out_path) / name).string();
}

pmh::TimeSeries load_observations(const std::string& path) {
  if (path.empty()) throw pmh::ConfigurationError("--data: missing data file path");
  if (!fs::exists(path)) throw pmh::InputError("--data: file '" + path + "' does not exist");
  if (pmh::looks_like_price_csv(path))
    return pmh::compute_log_returns(pmh::load_price_csv(path));
  return pmh::load_series_csv(path);
}

void echo_summary(const pmh::SummaryWriter& summary) { std::cout << summary.str(); }

void add_chain_summary(pmh::SummaryWriter& summary, const pmh::ChainTrace& trace, int burn_in,
                       int lags, const std::vector<std::string>& names) {
  const auto posterior = pmh::posterior_summary(trace, burn_in);
  // Short traces cap the usable ACF lag.
  const int usable_lags = std::min(lags, trace.iterations() - burn_in - 2);
  if (usable_lags < 1)
    throw pmh::ConfigurationError("--burnin: too few rows after burn-in for the summary");
  const auto mixing = pmh::mixing_report(trace, burn_in, usable_lags);
  summary.add("acceptance_rate", trace.acceptance_rate());
  for (std::size_t j = 0; j < names.size(); ++j) {
    summary.add(names[j] + ".mean", posterior.mean[j]);
    summary.add(names[j] + ".variance", posterior.variance[j]);
    summary.add(names[j] + ".std", posterior.std[j]);
    summary.add(names[j] + ".ci95_low", posterior.credible_interval_95[j].first);
    summary.add(names[j] + ".ci95_high", posterior.credible_interval_95[j].second);
    summary.add(names[j] + ".iact", mixing.iact[j]);
  }
}

void cmd_generate(const ExperimentConfig& config) {
  if (config.out_path.empty())
    throw pmh::ConfigurationError("--out: missing output file path");
  if (auto parent = fs::path(config.out_path).parent_path(); !parent.empty())
    fs::create_directories(parent);

  pmh::RngStream rng(config.seed);
  pmh::TimeSeries series;
  if (config.model == "lgss") {
    series = pmh::simulate_lgss({config.phi, config.sigma_v, config.sigma_e}, config.horizon,
                                config.x0, rng);
  } else if (config.model == "sv") {
    series = pmh::simulate_sv({config.mu, config.phi, config.sigma_v}, config.horizon, rng);
  } else {
    throw pmh::ConfigurationError("--model: expected 'lgss' or 'sv'");
  }
  pmh::write_series_csv(config.out_path, series);
  std::cout << "wrote " << config.out_path << " (" << series.length() << " observations)\n";
}

void cmd_filter_lgss(const ExperimentConfig& config) {
  const auto data = load_observations(config.data_path);
  const double x0 = config.x0_given ? config.x0 : (data.states ? data.initial_state : config.x0);
  const pmh::LgssParameters params{config.phi, config.sigma_v, config.sigma_e};

  pmh::RngStream rng(config.seed);
  const auto pf = pmh::fapf_lgss(data, params, config.particles, x0, rng);
  const auto kf = pmh::kalman_filter(data, params, x0);

  const int T = data.length();
  const auto metrics = pmh::state_error_metrics({pf.state_estimates.data() + 1, size_t(T)},
                                                {kf.filtered_means.data(), size_t(T)});

  auto states = pmh::open_output(out_file(config, "states.csv"));
  states << "t,x_hat,x_hat_kalman\n";
  states << "0," << pmh::format_double(pf.state_estimates[0]) << ",\n";
  for (int t = 1; t <= T; ++t)
    states << t << ',' << pmh::format_double(pf.state_estimates[t]) << ','
           << pmh::format_double(kf.filtered_means[t - 1]) << '\n';

  pmh::SummaryWriter summary;
  summary.add("command", std::string("filter-lgss"));
  summary.add("observations", T);
  summary.add("particles", config.particles);
  summary.add("seed", static_cast<long>(config.seed));
  summary.add("loglik_pf", pf.log_likelihood);
  summary.add("loglik_kalman", kf.log_likelihood);
  summary.add("log_bias", metrics.log_bias);
  summary.add("log_mse", metrics.log_mse);
  summary.write(out_file(config, "summary.txt"));
  echo_summary(summary);
}

void cmd_pmh_lgss(const ExperimentConfig& config) {
  const auto data = load_observations(config.data_path);
  const double x0 = config.x0_given ? config.x0 : (data.states ? data.initial_state : config.x0);

  pmh::ChainConfig chain;
  chain.iterations = config.iterations;
  chain.burn_in = config.burn_in;
  chain.particles = config.particles;
  chain.seed = config.seed;
  chain.initial_parameters = Eigen::VectorXd::Constant(1, config.initial_phi);

  const auto proposal = pmh::ProposalConfig::scalar(config.step_size);
  pmh::LgssPmhOptions options;
  options.sigma_v = config.sigma_v;
  options.sigma_e = config.sigma_e;
  options.x0 = x0;
  options.prior_mean = config.prior_mean;
  options.prior_variance = config.prior_variance;

  const auto trace = pmh::run_pmh_lgss(data, chain, proposal, options);
  pmh::write_trace_csv(out_file(config, "trace.csv"), trace, {"phi"});

  pmh::SummaryWriter summary;
  summary.add("command", std::string("pmh-lgss"));
  summary.add("observations", data.length());
  summary.add("particles", config.particles);
  summary.add("iterations", config.iterations);
  summary.add("burn_in", config.burn_in);
  summary.add("step_size", config.step_size);
  summary.add("seed", static_cast<long>(config.seed));
  add_chain_summary(summary, trace, config.burn_in, config.lags, {"phi"});
  summary.write(out_file(config, "summary.txt"));
  echo_summary(summary);
}

pmh::ProposalConfig sv_proposal(const ExperimentConfig& config) {
  pmh::ProposalConfig proposal;
  if (!config.covariance_path.empty()) {
    const auto matrix = pmh::load_covariance_csv(config.covariance_path);
    if (matrix.rows() != 3)
      throw pmh::ConfigurationError("--covariance: expected a 3x3 matrix");
    proposal = pmh::ProposalConfig::multivariate(matrix, !config.no_scale_rule);
  } else {
    std::vector<double> steps = config.sv_steps;
    if (steps.size() == 1) steps = {steps[0], steps[0], steps[0]};
    if (steps.size() != 3)
      throw pmh::ConfigurationError("--step-size: expected one or three values");
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(3, 3);
    for (int j = 0; j < 3; ++j) diag(j, j) = steps[j] * steps[j];
    proposal = pmh::ProposalConfig::multivariate(diag);
  }
  proposal.reparametrized = config.reparametrized;
  return proposal;
}

void write_volatility_csv(const std::string& path, const pmh::ChainTrace& trace, int burn_in) {
  if (!trace.state_trajectories) return;
  const auto& paths = *trace.state_trajectories;
  const int rows = static_cast<int>(paths.rows()) - burn_in;
  auto out = pmh::open_output(path);
  out << "t,log_volatility_mean,log_volatility_std\n";
  for (int t = 0; t < paths.cols(); ++t) {
    const Eigen::VectorXd column = paths.col(t).tail(rows);
    const double mean = column.mean();
    const double var = rows > 1 ? (column.array() - mean).square().sum() / (rows - 1) : 0.0;
    out << t << ',' << pmh::format_double(mean) << ',' << pmh::format_double(std::sqrt(var))
        << '\n';
  }
}

void cmd_pmh_sv(const ExperimentConfig& config) {
  const auto data = load_observations(config.data_path);

  pmh::ChainConfig chain;
  chain.iterations = config.iterations;
  chain.burn_in = config.burn_in;
  chain.particles = config.particles;
  chain.seed = config.seed;
  if (config.initial_sv.size() != 3)
    throw pmh::ConfigurationError("--initial: expected three values mu,phi,sigma_v");
  chain.initial_parameters =
      Eigen::Vector3d(config.initial_sv[0], config.initial_sv[1], config.initial_sv[2]);

  const auto proposal = sv_proposal(config);
  const auto trace = pmh::run_pmh_sv(data, chain, proposal);

  const std::vector<std::string> names = {"mu", "phi", "sigma_v"};
  pmh::write_trace_csv(out_file(config, "trace.csv"), trace, names);
  write_volatility_csv(out_file(config, "volatility.csv"), trace, config.burn_in);

  pmh::SummaryWriter summary;
  summary.add("command", std::string("pmh-sv"));
  summary.add("observations", data.length());
  summary.add("particles", config.particles);
  summary.add("iterations", config.iterations);
  summary.add("burn_in", config.burn_in);
  summary.add("reparametrized", config.reparametrized ? 1 : 0);
  summary.add("seed", static_cast<long>(config.seed));
  add_chain_summary(summary, trace, config.burn_in, config.lags, names);
  summary.write(out_file(config, "summary.txt"));
  echo_summary(summary);
}

void cmd_tune_proposal(const ExperimentConfig& config) {
  const auto data = load_observations(config.data_path);

  pmh::ChainConfig chain;
  chain.iterations = config.iterations;
  chain.burn_in = config.burn_in;
  chain.particles = config.particles;
  chain.seed = config.seed;
  chain.initial_parameters =
      Eigen::Vector3d(config.initial_sv[0], config.initial_sv[1], config.initial_sv[2]);

  ExperimentConfig pilot_config = config;
  pilot_config.covariance_path.clear();
  pilot_config.reparametrized = false;
  const auto pilot = pmh::run_pmh_sv(data, chain, sv_proposal(pilot_config));
  const auto preconditioner = pmh::estimate_preconditioner(pilot, config.burn_in);

  pmh::ChainConfig tuned_chain = chain;
  tuned_chain.seed = config.seed + 1;
  const auto tuned_proposal = pmh::ProposalConfig::multivariate(preconditioner, true);
  const auto tuned = pmh::run_pmh_sv(data, tuned_chain, tuned_proposal);

  const std::vector<std::string> names = {"mu", "phi", "sigma_v"};
  pmh::write_trace_csv(out_file(config, "pilot_trace.csv"), pilot, names);
  pmh::write_trace_csv(out_file(config, "tuned_trace.csv"), tuned, names);
  pmh::write_covariance_csv(out_file(config, "covariance.csv"), preconditioner);

  const auto pilot_mixing = pmh::mixing_report(pilot, config.burn_in, config.lags);
  const auto tuned_mixing = pmh::mixing_report(tuned, config.burn_in, config.lags);

  pmh::SummaryWriter summary;
  summary.add("command", std::string("tune-proposal"));
  summary.add("observations", data.length());
  summary.add("particles", config.particles);
  summary.add("iterations", config.iterations);
  summary.add("burn_in", config.burn_in);
  summary.add("seed", static_cast<long>(config.seed));
  summary.add("pilot.acceptance_rate", pilot.acceptance_rate());
  summary.add("tuned.acceptance_rate", tuned.acceptance_rate());
  for (std::size_t j = 0; j < names.size(); ++j) {
    summary.add("pilot." + names[j] + ".iact", pilot_mixing.iact[j]);
    summary.add("tuned." + names[j] + ".iact", tuned_mixing.iact[j]);
  }
  const double pilot_max = *std::max_element(pilot_mixing.iact.begin(), pilot_mixing.iact.end());
  const double tuned_max = *std::max_element(tuned_mixing.iact.begin(), tuned_mixing.iact.end());
  summary.add("pilot.max_iact", pilot_max);
  summary.add("tuned.max_iact", tuned_max);
  summary.write(out_file(config, "summary.txt"));
  echo_summary(summary);
}

void cmd_n_study(const ExperimentConfig& config) {
  const auto data = load_observations(config.data_path);
  const pmh::SvParameters params{config.mu, config.phi, config.sigma_v};
  if (!params.valid())
    throw pmh::ConfigurationError("--mu/--phi/--sigma-v: invalid SV parameters");

  const auto estimator = [&](int n, pmh::RngStream& rng) {
    return pmh::bpf_sv(data, params, n, rng).log_likelihood;
  };
  const auto table = pmh::loglik_std_study(estimator, config.grid, config.runs, config.seed);

  auto out = pmh::open_output(out_file(config, "nstudy.csv"));
  out << "N,std_loglik,failed_runs\n";
  for (const auto& entry : table) {
    out << entry.num_particles << ',' << pmh::format_double(entry.std_log_likelihood) << ','
        << entry.failed_runs << '\n';
    std::cout << "N=" << entry.num_particles
              << " std_loglik=" << pmh::format_double(entry.std_log_likelihood)
              << " failed_runs=" << entry.failed_runs << '\n';
  }
}

void cmd_diagnose(const ExperimentConfig& config) {
  if (config.trace_path.empty())
    throw pmh::ConfigurationError("--trace: missing trace file path");
  if (!fs::exists(config.trace_path))
    throw pmh::InputError("--trace: file '" + config.trace_path + "' does not exist");
  const auto loaded = pmh::load_trace_csv(config.trace_path);
  const auto& trace = loaded.trace;
  if (config.burn_in >= trace.iterations())
    throw pmh::ConfigurationError("--burnin: exceeds the trace length");

  pmh::SummaryWriter summary;
  summary.add("command", std::string("diagnose"));
  summary.add("trace", config.trace_path);
  summary.add("iterations", trace.iterations());
  summary.add("burn_in", config.burn_in);
  summary.add("alpha", config.alpha);
  add_chain_summary(summary, trace, config.burn_in, config.lags, loaded.parameter_names);

  const int rows = trace.iterations() - config.burn_in;
  // Each KS half needs at least 20 thinned samples.
  const int max_lag = rows / 2 / 20;
  for (std::size_t j = 0; j < loaded.parameter_names.size(); ++j) {
    const auto& name = loaded.parameter_names[j];
    if (max_lag < 1) {
      summary.add(name + ".ks", std::string("skipped_insufficient_samples"));
      continue;
    }
    const Eigen::VectorXd column = trace.parameters.col(j).tail(rows);
    const std::span<const double> values{column.data(), static_cast<std::size_t>(rows)};
    int lag = config.thinning > 0 ? config.thinning : pmh::suggest_thinning_lag(values);
    lag = std::min(lag, max_lag);
    const auto ks = pmh::ks_stationarity_test(values, 0, lag, config.alpha);
    summary.add(name + ".thinning_lag", lag);
    summary.add(name + ".ks_statistic", ks.statistic);
    summary.add(name + ".ks_critical", ks.critical_value);
    summary.add(name + ".ks_pass", ks.pass ? 1 : 0);
  }
  summary.write(out_file(config, "diagnostics.txt"));
  echo_summary(summary);
}

void add_common_options(CLI::App* cmd, ExperimentConfig& config, bool with_chain) {
  cmd->add_option("--particles", config.particles, "number of particles N");
  if (with_chain) {
    cmd->add_option("--iterations", config.iterations, "chain length K");
    cmd->add_option("--burnin", config.burn_in, "burn-in K_b (rows kept in the trace)");
  }
  cmd->add_option("--seed", config.seed, "random seed");
  cmd->add_option("--out", config.out_path, "output directory")->required();
  cmd->add_option("--lags", config.lags, "IACT lag cutoff L");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle filtering and particle Metropolis-Hastings for state-space models"};
  app.require_subcommand(1);

  ExperimentConfig gen_cfg, filter_cfg, lgss_cfg, sv_cfg, tune_cfg, study_cfg, diag_cfg;

  auto* generate = app.add_subcommand("generate-data", "simulate a dataset and write it as CSV");
  generate->add_option("--model", gen_cfg.model, "lgss or sv");
  auto* gen_T = generate->add_option("--T", gen_cfg.horizon, "number of observations");
  auto* gen_phi = generate->add_option("--phi", gen_cfg.phi, "persistence");
  auto* gen_sv = generate->add_option("--sigma-v", gen_cfg.sigma_v, "state noise std");
  generate->add_option("--sigma-e", gen_cfg.sigma_e, "observation noise std (lgss)");
  generate->add_option("--mu", gen_cfg.mu, "log-volatility mean (sv)");
  generate->add_option("--x0", gen_cfg.x0, "initial state (lgss)");
  generate->add_option("--seed", gen_cfg.seed, "random seed");
  generate->add_option("--out", gen_cfg.out_path, "output CSV file")->required();

  auto* filter = app.add_subcommand("filter-lgss", "run the fully-adapted filter and the exact "
                                                   "filter on an LGSS dataset");
  filter->add_option("--data", filter_cfg.data_path, "dataset CSV")->required();
  filter->add_option("--phi", filter_cfg.phi, "persistence");
  filter->add_option("--sigma-v", filter_cfg.sigma_v, "state noise std");
  filter->add_option("--sigma-e", filter_cfg.sigma_e, "observation noise std");
  auto* filter_x0 = filter->add_option("--x0", filter_cfg.x0, "initial state");
  add_common_options(filter, filter_cfg, false);

  auto* pmh_lgss = app.add_subcommand("pmh-lgss", "PMH for phi in the LGSS model");
  pmh_lgss->add_option("--data", lgss_cfg.data_path, "dataset CSV")->required();
  pmh_lgss->add_option("--step-size", lgss_cfg.step_size, "random-walk step size");
  pmh_lgss->add_option("--initial-phi", lgss_cfg.initial_phi, "chain start");
  pmh_lgss->add_option("--sigma-v", lgss_cfg.sigma_v, "fixed state noise std");
  pmh_lgss->add_option("--sigma-e", lgss_cfg.sigma_e, "fixed observation noise std");
  auto* pmh_lgss_x0 = pmh_lgss->add_option("--x0", lgss_cfg.x0, "initial state");
  pmh_lgss->add_option("--prior-mean", lgss_cfg.prior_mean, "phi prior mean");
  pmh_lgss->add_option("--prior-var", lgss_cfg.prior_variance, "phi prior variance");
  add_common_options(pmh_lgss, lgss_cfg, true);

  auto* pmh_sv = app.add_subcommand("pmh-sv", "PMH for (mu, phi, sigma_v) in the SV model");
  sv_cfg.particles = 500;
  sv_cfg.iterations = 7500;
  sv_cfg.burn_in = 2500;
  pmh_sv->add_option("--data", sv_cfg.data_path, "dataset CSV (state series or date,close)")
      ->required();
  pmh_sv->add_option("--step-size", sv_cfg.sv_steps, "proposal stds (one or three values)")
      ->delimiter(',');
  pmh_sv->add_option("--covariance", sv_cfg.covariance_path,
                     "proposal covariance CSV (3x3); scaled by 2.562^2/3 unless --no-scale-rule");
  pmh_sv->add_flag("--no-scale-rule", sv_cfg.no_scale_rule,
                   "use the covariance file as-is, without the 2.562^2/3 factor");
  pmh_sv->add_flag("--reparam", sv_cfg.reparametrized,
                   "walk in (mu, artanh phi, log sigma_v) with the Jacobian correction");
  pmh_sv->add_option("--initial", sv_cfg.initial_sv, "chain start mu,phi,sigma_v")
      ->delimiter(',');
  add_common_options(pmh_sv, sv_cfg, true);

  auto* tune = app.add_subcommand("tune-proposal", "pilot run, pre-conditioner estimate and "
                                                   "tuned re-run for the SV model");
  tune_cfg.particles = 500;
  tune_cfg.iterations = 7500;
  tune_cfg.burn_in = 2500;
  tune->add_option("--data", tune_cfg.data_path, "dataset CSV")->required();
  tune->add_option("--step-size", tune_cfg.sv_steps, "pilot proposal stds")->delimiter(',');
  tune->add_option("--initial", tune_cfg.initial_sv, "chain start mu,phi,sigma_v")
      ->delimiter(',');
  add_common_options(tune, tune_cfg, true);

  auto* nstudy = app.add_subcommand("n-study", "standard deviation of the SV log-likelihood "
                                               "estimate over a grid of particle counts");
  study_cfg.mu = -0.23;
  study_cfg.phi = 0.97;
  study_cfg.sigma_v = 0.15;
  nstudy->add_option("--data", study_cfg.data_path, "dataset CSV")->required();
  nstudy->add_option("--grid", study_cfg.grid, "particle counts")->delimiter(',');
  nstudy->add_option("--runs", study_cfg.runs, "Monte Carlo runs per grid point");
  nstudy->add_option("--mu", study_cfg.mu, "SV mu");
  nstudy->add_option("--phi", study_cfg.phi, "SV phi");
  nstudy->add_option("--sigma-v", study_cfg.sigma_v, "SV sigma_v");
  nstudy->add_option("--seed", study_cfg.seed, "random seed");
  nstudy->add_option("--out", study_cfg.out_path, "output directory")->required();

  auto* diagnose = app.add_subcommand("diagnose", "posterior summary, IACT and KS stationarity "
                                                  "check for a saved trace");
  diag_cfg.burn_in = 0;
  diagnose->add_option("--trace", diag_cfg.trace_path, "trace CSV")->required();
  diagnose->add_option("--burnin", diag_cfg.burn_in, "burn-in rows to discard");
  diagnose->add_option("--lags", diag_cfg.lags, "IACT lag cutoff L");
  diagnose->add_option("--alpha", diag_cfg.alpha, "KS test level");
  diagnose->add_option("--thinning", diag_cfg.thinning, "thinning lag (0 = pick from the ACF)");
  diagnose->add_option("--out", diag_cfg.out_path, "output directory")->required();

  try {
    app.parse(argc, argv);

    if (generate->parsed()) {
      if (gen_cfg.model == "sv") {
        if (gen_T->count() == 0) gen_cfg.horizon = 500;
        if (gen_phi->count() == 0) gen_cfg.phi = 0.9;
        if (gen_sv->count() == 0) gen_cfg.sigma_v = 0.2;
      }
      cmd_generate(gen_cfg);
    } else if (filter->parsed()) {
      filter_cfg.x0_given = filter_x0->count() > 0;
      cmd_filter_lgss(filter_cfg);
    } else if (pmh_lgss->parsed()) {
      lgss_cfg.x0_given = pmh_lgss_x0->count() > 0;
      cmd_pmh_lgss(lgss_cfg);
    } else if (pmh_sv->parsed()) {
      cmd_pmh_sv(sv_cfg);
    } else if (tune->parsed()) {
      cmd_tune_proposal(tune_cfg);
    } else if (nstudy->parsed()) {
      cmd_n_study(study_cfg);
    } else if (diagnose->parsed()) {
      cmd_diagnose(diag_cfg);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
