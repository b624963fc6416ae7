// Acceptance suite: runs the project's ten exit checks and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.
//
// Real OMXS30 data is not bundled; when data/omxs30.csv is absent the SV
// checks run against the bundled synthetic dataset, as documented in the
// README, and the lines say which branch ran.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pmh/pmh.hpp"
#include "support/datasets.hpp"
#include "support/oracles.hpp"

using namespace pmh;
namespace fs = std::filesystem;

namespace {

constexpr int kSvParticles = 200;
constexpr int kSvIterations = 7500;
constexpr int kSvBurnIn = 2500;

Eigen::MatrixXd naive_sv_covariance() {
  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(3, 3);
  diag(0, 0) = 0.10 * 0.10;
  diag(1, 1) = 0.01 * 0.01;
  diag(2, 2) = 0.05 * 0.05;
  return diag;
}

ChainConfig sv_chain_config(std::uint64_t seed, const Eigen::Vector3d& start) {
  ChainConfig config;
  config.iterations = kSvIterations;
  config.burn_in = kSvBurnIn;
  config.particles = kSvParticles;
  config.seed = seed;
  config.initial_parameters = start;
  return config;
}

/// Lazily computed shared state: the SV dataset in use, the naive pilot
/// chain on it and the pre-conditioners derived from that pilot.
struct SvFixture {
  TimeSeries data;
  bool using_omxs30 = false;
  Eigen::Vector3d start{0.0, 0.9, 0.2};

  std::optional<ChainTrace> pilot;
  Eigen::MatrixXd preconditioner;              // theta-space
  Eigen::MatrixXd preconditioner_transformed;  // (mu, artanh phi, log sigma_v)-space
  std::optional<ChainTrace> tuned;

  static SvFixture& instance() {
    static SvFixture fixture;
    return fixture;
  }

  const ChainTrace& pilot_chain() {
    if (!pilot) {
      pilot = run_pmh_sv(data, sv_chain_config(900, start),
                         ProposalConfig::multivariate(naive_sv_covariance()));
      preconditioner = estimate_preconditioner(*pilot, kSvBurnIn);

      ChainTrace transformed = *pilot;
      for (int k = 0; k < transformed.iterations(); ++k) {
        const auto u = to_unconstrained(SvParameters{transformed.parameters(k, 0),
                                                     transformed.parameters(k, 1),
                                                     transformed.parameters(k, 2)});
        transformed.parameters(k, 0) = u.mu;
        transformed.parameters(k, 1) = u.psi;
        transformed.parameters(k, 2) = u.varsigma;
      }
      preconditioner_transformed = estimate_preconditioner(transformed, kSvBurnIn);
    }
    return *pilot;
  }

  const ChainTrace& tuned_chain() {
    if (!tuned) {
      pilot_chain();
      tuned = run_pmh_sv(data, sv_chain_config(910, start),
                         ProposalConfig::multivariate(preconditioner, true));
    }
    return *tuned;
  }

private:
  SvFixture() {
    const fs::path omxs30 = fs::path(PMH_DATA_DIR) / "omxs30.csv";
    if (fs::exists(omxs30)) {
      data = compute_log_returns(load_price_csv(omxs30.string()));
      using_omxs30 = true;
      start = {-0.2, 0.95, 0.2};
    } else {
      data = datasets::sv_reference();
    }
  }
};

bool criterion_1(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream data_rng(42);
  const auto data = simulate_lgss(datasets::kLgssTrueParameters, 50, 0.0, data_rng);
  const auto kf = kalman_filter(data, datasets::kLgssTrueParameters, 0.0);

  double mean_ratio = 0.0;
  const int runs = 500;
  for (int s = 0; s < runs; ++s) {
    RngStream rng(1000u + s);
    const auto pf = fapf_lgss(data, datasets::kLgssTrueParameters, 200, 0.0, rng);
    mean_ratio += std::exp(pf.log_likelihood - kf.log_likelihood);
  }
  mean_ratio /= runs;
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream out;
  out << "mean likelihood ratio " << mean_ratio << " (bounds [0.85, 1.15]), " << seconds << "s";
  detail = out.str();
  return mean_ratio >= 0.85 && mean_ratio <= 1.15 && seconds < 60.0;
}

bool criterion_2(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = datasets::lgss_reference();
  const auto kf = kalman_filter(data, datasets::kLgssTrueParameters, 0.0);
  const int T = data.length();

  std::vector<double> avg_log_mse;
  for (int n : {10, 100, 1000}) {
    double acc = 0.0;
    for (int s = 0; s < 10; ++s) {
      RngStream rng(2000u + 100u * n + s);
      const auto pf = fapf_lgss(data, datasets::kLgssTrueParameters, n, 0.0, rng);
      acc += state_error_metrics({pf.state_estimates.data() + 1, size_t(T)},
                                 {kf.filtered_means.data(), size_t(T)})
                 .log_mse;
    }
    avg_log_mse.push_back(acc / 10.0);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const bool decreasing = avg_log_mse[0] > avg_log_mse[1] && avg_log_mse[1] > avg_log_mse[2];
  const bool at_10 = std::abs(avg_log_mse[0] - (-6.94)) <= 1.5;
  const bool at_1000 = std::abs(avg_log_mse[2] - (-11.67)) <= 2.0;

  std::ostringstream out;
  out << "avg log-MSE {" << avg_log_mse[0] << ", " << avg_log_mse[1] << ", " << avg_log_mse[2]
      << "} for N {10, 100, 1000}, " << seconds << "s";
  detail = out.str();
  return decreasing && at_10 && at_1000 && seconds < 120.0;
}

bool criterion_3(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto proposal = ProposalConfig::scalar(0.10);
  const LgssPmhOptions options{1.0, 0.1, 0.0};

  ChainConfig config;
  config.iterations = 5000;
  config.burn_in = 1000;
  config.particles = 100;
  config.seed = 300;
  config.initial_parameters = Eigen::VectorXd::Constant(1, 0.5);

  const auto reference = datasets::lgss_reference();
  const auto trace = run_pmh_lgss(reference, config, proposal, options);
  const auto posterior = posterior_summary(trace, config.burn_in);
  const double mean_phi = posterior.mean[0];

  std::vector<double> variances;
  int dataset_seed = 101;
  for (int T : {50, 200, 500}) {
    RngStream data_rng(dataset_seed);
    const auto data = simulate_lgss(datasets::kLgssTrueParameters, T, 0.0, data_rng);
    ChainConfig c = config;
    c.seed = 300u + dataset_seed;
    const auto t = run_pmh_lgss(data, c, proposal, options);
    variances.push_back(posterior_summary(t, c.burn_in).variance[0]);
    ++dataset_seed;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const bool mean_ok = mean_phi >= 0.55 && mean_phi <= 0.80;
  const bool trend = variances[0] > variances[1] && variances[1] > variances[2];
  const bool final_ok = variances[2] <= 0.004;

  std::ostringstream out;
  out << "posterior mean " << mean_phi << " (bounds [0.55, 0.80]); variance over T {50, 200, "
      << "500} = {" << variances[0] << ", " << variances[1] << ", " << variances[2] << "}, "
      << seconds << "s";
  detail = out.str();
  return mean_ok && trend && final_ok && seconds < 300.0;
}

bool criterion_4(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  auto& fixture = SvFixture::instance();
  fixture.pilot_chain();

  std::ostringstream out;
  bool pass = true;
  if (fixture.using_omxs30) {
    const auto& tuned = fixture.tuned_chain();
    const auto posterior = posterior_summary(tuned, kSvBurnIn);
    const double reported_mean[3] = {-0.23, 0.97, 0.15};
    const double reported_std[3] = {0.37, 0.02, 0.06};
    out << "OMXS30 posterior mean {";
    for (int j = 0; j < 3; ++j) {
      out << posterior.mean[j] << (j < 2 ? ", " : "}");
      if (std::abs(posterior.mean[j] - reported_mean[j]) > 2.0 * reported_std[j]) pass = false;
    }
  } else {
    // Synthetic fallback: five tuned chains; every true parameter must sit
    // inside the 95% credible interval in at least three of them.
    const double truth[3] = {datasets::kSvTrueParameters.mu, datasets::kSvTrueParameters.phi,
                             datasets::kSvTrueParameters.sigma_v};
    int covered[3] = {0, 0, 0};
    std::vector<ChainTrace> traces(5);
    std::vector<std::thread> workers;
    const auto proposal = ProposalConfig::multivariate(fixture.preconditioner, true);
    for (int s = 0; s < 5; ++s) {
      workers.emplace_back([&, s] {
        traces[s] = run_pmh_sv(fixture.data, sv_chain_config(901u + s, fixture.start), proposal);
      });
      if (workers.size() == 2 || s == 4) {
        for (auto& w : workers) w.join();
        workers.clear();
      }
    }
    for (const auto& trace : traces) {
      const auto posterior = posterior_summary(trace, kSvBurnIn);
      for (int j = 0; j < 3; ++j) {
        const auto [lo, hi] = posterior.credible_interval_95[j];
        if (truth[j] >= lo && truth[j] <= hi) ++covered[j];
      }
    }
    out << "synthetic fallback, CI coverage over 5 runs {" << covered[0] << ", " << covered[1]
        << ", " << covered[2] << "}/5";
    for (int j = 0; j < 3; ++j) pass = pass && covered[j] >= 3;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << ", " << seconds << "s";
  detail = out.str();
  return pass && seconds < 900.0;
}

bool criterion_5(std::string& detail) {
  auto& fixture = SvFixture::instance();
  const auto naive_mixing = mixing_report(fixture.pilot_chain(), kSvBurnIn, 100);
  const auto tuned_mixing = mixing_report(fixture.tuned_chain(), kSvBurnIn, 100);
  const double naive_max = *std::max_element(naive_mixing.iact.begin(), naive_mixing.iact.end());
  const double tuned_max = *std::max_element(tuned_mixing.iact.begin(), tuned_mixing.iact.end());

  std::ostringstream out;
  out << "max IACT naive " << naive_max << " -> tuned " << tuned_max << " (need <= 0.5x)";
  detail = out.str();
  return tuned_max <= 0.5 * naive_max;
}

bool criterion_6(std::string& detail) {
  auto& fixture = SvFixture::instance();
  fixture.pilot_chain();

  auto reparam_proposal = ProposalConfig::multivariate(fixture.preconditioner_transformed, true);
  reparam_proposal.reparametrized = true;
  const auto reparam = run_pmh_sv(fixture.data, sv_chain_config(911, fixture.start),
                                  reparam_proposal);
  const auto direct_posterior = posterior_summary(fixture.tuned_chain(), kSvBurnIn);
  const auto reparam_posterior = posterior_summary(reparam, kSvBurnIn);

  bool pass = true;
  std::ostringstream out;
  out << "posterior mean differences {";
  for (int j = 0; j < 3; ++j) {
    const double diff = std::abs(direct_posterior.mean[j] - reparam_posterior.mean[j]);
    out << diff << (j < 2 ? ", " : "} (need < 0.1 each)");
    pass = pass && diff < 0.1;
  }

  for (double phi : {-0.99, -0.5, 0.0, 0.5, 0.9, 0.97, 0.999}) {
    for (double sigma : {0.01, 0.15, 1.0, 5.0}) {
      const SvParameters p{0.3, phi, sigma};
      const auto back = from_unconstrained(to_unconstrained(p));
      pass = pass && std::abs(back.phi - p.phi) <= 1e-12 &&
             std::abs(back.sigma_v - p.sigma_v) <= 1e-12 * p.sigma_v;
    }
  }
  detail = out.str();
  return pass;
}

bool criterion_7(std::string& detail) {
  const auto ar = oracles::ar1_sequence(0.5, 100000, 42);
  const double iact_ar = estimate_iact(ar, 100).iact;

  RngStream rng(1042);
  std::vector<double> iid(100000);
  for (double& x : iid) x = rng.normal();
  const double iact_iid = estimate_iact(iid, 100).iact;

  std::ostringstream out;
  out << "AR(1) IACT " << iact_ar << " (3.0 +- 0.3), iid IACT " << iact_iid << " (1.0 +- 0.2)";
  detail = out.str();
  return std::abs(iact_ar - 3.0) <= 0.3 && std::abs(iact_iid - 1.0) <= 0.2;
}

bool criterion_8(std::string& detail) {
  RngStream rng(88);
  const std::vector<double> two{0.25, 0.75};
  long second = 0;
  const int draws = 100000;
  for (int rep = 0; rep < draws / 2; ++rep)
    for (auto a : multinomial_resample(two, rng)) second += a;
  const double freq = static_cast<double>(second) / draws;

  // Random 5-category weights, chi-square goodness of fit.
  std::vector<double> weights(5);
  double sum = 0.0;
  for (double& w : weights) {
    w = 0.05 + rng.uniform();
    sum += w;
  }
  for (double& w : weights) w /= sum;

  std::vector<long> counts(5, 0);
  int total = 0;
  while (total < 100000) {
    for (auto a : multinomial_resample(weights, rng)) ++counts[a];
    total += 5;
  }
  double statistic = 0.0;
  for (int j = 0; j < 5; ++j) {
    const double expected = weights[j] * total;
    statistic += (counts[j] - expected) * (counts[j] - expected) / expected;
  }
  const double p_value = oracles::chi_square_p_value(statistic, 4);

  std::ostringstream out;
  out << "frequency " << freq << " (0.75 +- 0.01), chi-square p " << p_value
      << " (need > 0.001)";
  detail = out.str();
  return std::abs(freq - 0.75) <= 0.01 && p_value > 0.001;
}

bool criterion_9(std::string& detail) {
  auto& fixture = SvFixture::instance();
  const SvParameters params = fixture.using_omxs30
                                  ? SvParameters{-0.23, 0.97, 0.15}
                                  : datasets::kSvTrueParameters;
  const auto estimator = [&](int n, RngStream& rng) {
    return bpf_sv(fixture.data, params, n, rng).log_likelihood;
  };
  const std::vector<int> grid{50, 100, 200, 500};
  const auto table = loglik_std_study(estimator, grid, 200, 99);

  bool monotone = true;
  std::ostringstream out;
  out << "std log-lik {";
  for (std::size_t g = 0; g < table.size(); ++g) {
    out << table[g].std_log_likelihood << (g + 1 < table.size() ? ", " : "}");
    if (g > 0 && table[g].std_log_likelihood > table[g - 1].std_log_likelihood)
      monotone = false;
  }
  bool value_ok = true;
  if (fixture.using_omxs30) {
    value_ok = std::abs(table[1].std_log_likelihood - 1.8) <= 0.5;
    out << ", OMXS30 N=100 std " << table[1].std_log_likelihood << " (1.8 +- 0.5)";
  } else {
    out << " (synthetic fallback, trend only)";
  }
  detail = out.str();
  return monotone && value_ok;
}

bool criterion_10(std::string& detail) {
  std::ostringstream out;
  bool pass = true;

  // (a) Bit-identical normalized weights under exact-representable shifts.
  {
    RngStream rng(110);
    bool shift_ok = true;
    for (int rep = 0; rep < 200 && shift_ok; ++rep) {
      std::vector<double> lw(128);
      for (double& v : lw)
        v = std::round((20.0 * rng.uniform() - 10.0) * 0x1.0p26) * 0x1.0p-26;
      const auto base = normalize_log_weights(lw);
      for (double shift : {700.0, -700.0, 512.0, -512.0}) {
        auto shifted = lw;
        for (double& v : shifted) v += shift;
        const auto moved = normalize_log_weights(shifted);
        for (std::size_t i = 0; i < lw.size(); ++i)
          shift_ok = shift_ok && moved.weights[i] == base.weights[i];
      }
    }
    out << (shift_ok ? "shift-invariance ok" : "shift-invariance FAILED");
    pass = pass && shift_ok;
  }

  // (b) Acceptance probability stays in [0, 1] under fuzzing.
  {
    RngStream rng(111);
    bool prob_ok = true;
    for (int i = 0; i < 10000; ++i) {
      const double cand_prior = rng.uniform() < 0.1 ? kNegInf : 30.0 * rng.normal();
      const double prob = acceptance_probability(log_acceptance_ratio(
          cand_prior, 30.0 * rng.normal(), 500.0 * rng.normal(), 500.0 * rng.normal(),
          rng.normal()));
      prob_ok = prob_ok && prob >= 0.0 && prob <= 1.0;
    }
    out << (prob_ok ? "; acceptance bounds ok" : "; acceptance bounds FAILED");
    pass = pass && prob_ok;
  }

  // (c) Invalid candidates are never accepted; (d) rejected iterations copy
  // the previous row exactly.
  {
    RngStream data_rng(112);
    const auto data = simulate_sv(datasets::kSvTrueParameters, 60, data_rng);
    ChainConfig config;
    config.iterations = 500;
    config.burn_in = 0;
    config.particles = 30;
    config.seed = 113;
    config.initial_parameters = Eigen::Vector3d(0.0, 0.9, 0.2);
    Eigen::MatrixXd wide = Eigen::MatrixXd::Identity(3, 3) * 0.25;  // frequent invalid draws
    const auto trace = run_pmh_sv(data, config, ProposalConfig::multivariate(wide));

    bool domain_ok = true;
    bool copy_ok = true;
    int rejected = 0;
    for (int k = 0; k < trace.iterations(); ++k) {
      domain_ok = domain_ok && std::abs(trace.parameters(k, 1)) < 1.0 &&
                  trace.parameters(k, 2) > 0.0;
      if (k > 0 && !trace.accepted[k]) {
        ++rejected;
        copy_ok = copy_ok && trace.parameters.row(k) == trace.parameters.row(k - 1) &&
                  trace.log_likelihoods[k] == trace.log_likelihoods[k - 1] &&
                  trace.state_trajectories->row(k) == trace.state_trajectories->row(k - 1);
      }
    }
    copy_ok = copy_ok && rejected > 0;
    out << (domain_ok ? "; invalid-candidate guard ok" : "; invalid-candidate guard FAILED");
    out << (copy_ok ? "; rejection copies ok" : "; rejection copies FAILED");
    pass = pass && domain_ok && copy_ok;
  }

  // (e) Identical seeds give byte-identical trace files through the CLI.
  {
    const fs::path dir =
        fs::temp_directory_path() / ("pmh_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const auto series = datasets::lgss_reference();
    write_series_csv((dir / "data.csv").string(), series);
    const std::string base = std::string(PMH_CLI_PATH) + " pmh-lgss --data " +
                             (dir / "data.csv").string() +
                             " --particles 20 --iterations 300 --burnin 50 --seed 7 --out ";
    bool cli_ok = std::system((base + (dir / "r1").string() + " > /dev/null").c_str()) == 0;
    cli_ok = cli_ok && std::system((base + (dir / "r2").string() + " > /dev/null").c_str()) == 0;
    if (cli_ok) {
      std::ifstream a(dir / "r1" / "trace.csv", std::ios::binary);
      std::ifstream b(dir / "r2" / "trace.csv", std::ios::binary);
      const std::string sa{std::istreambuf_iterator<char>(a), std::istreambuf_iterator<char>()};
      const std::string sb{std::istreambuf_iterator<char>(b), std::istreambuf_iterator<char>()};
      cli_ok = !sa.empty() && sa == sb;
    }
    fs::remove_all(dir);
    out << (cli_ok ? "; trace determinism ok" : "; trace determinism FAILED");
    pass = pass && cli_ok;
  }

  detail = out.str();
  return pass;
}

struct Criterion {
  int id;
  std::string name;
  std::function<bool(std::string&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "faPF likelihood unbiasedness vs Kalman", criterion_1},
      {2, "filtered-state log-MSE table at desk scale", criterion_2},
      {3, "LGSS posterior mean and variance-vs-T trend", criterion_3},
      {4, "SV posterior inference", criterion_4},
      {5, "pre-conditioned proposal halves the max IACT", criterion_5},
      {6, "reparametrized and direct chains agree", criterion_6},
      {7, "IACT oracle values", criterion_7},
      {8, "multinomial resampling law", criterion_8},
      {9, "log-likelihood spread shrinks with N", criterion_9},
      {10, "property suite", criterion_10},
  };

  std::cout.precision(4);
  int failures = 0;
  for (const auto& criterion : criteria) {
    if (!selected.empty() && !selected.count(criterion.id)) continue;
    std::string detail;
    bool pass = false;
    try {
      pass = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << criterion.id << ". " << criterion.name
              << " - " << detail << '\n'
              << std::flush;
    failures += pass ? 0 : 1;
  }
  if (failures == 0)
    std::cout << "all criteria passed\n";
  else
    std::cout << failures << " criteria failed\n";
  return failures;
}
