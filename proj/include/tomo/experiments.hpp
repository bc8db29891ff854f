#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "tomo/common.hpp"
#include "tomo/io.hpp"
#include "tomo/mcmc.hpp"
#include "tomo/parallel.hpp"
#include "tomo/statmodel.hpp"

namespace tomo {

// Posterior-contraction experiment: as the number of observations N grows,
// the L2 error of the posterior mean against the generating truth should
// fall. The asymptotic rate is out of reach at desk scale; the deliverable
// is the monotone decay and the fitted log-log slope.

struct RateOptions {
  std::vector<long> n_values = {250, 1000, 4000};
  int replicates = 4;
  double nu = 4.4;
  double target_omega = 0.25;
  int data_table_k = 64;
  int chain_table_k = 32;
  double noise = 1.0;
  double max_flagged_fraction = 0.2;
  PcnOptions chain = make_chain_defaults();
  BvpOptions chain_bvp = make_chain_bvp_defaults();

  static PcnOptions make_chain_defaults() {
    PcnOptions p;
    p.n_steps = 2400;
    p.burn_in = 800;
    p.thinning = 8;
    return p;
  }

  // Coarser than the PosteriorModel defaults: the chain tables feed a
  // unit-variance likelihood, so a z bias of order 1e-7 is irrelevant and
  // the reduced fan/step cut the per-proposal cost roughly in half.
  static BvpOptions make_chain_bvp_defaults() {
    BvpOptions b = PosteriorModel::make_bvp_defaults();
    b.arc_tol = 3e-7;
    b.fan_size = 40;
    b.shoot.step = 6e-3;
    return b;
  }

  void validate(const PriorSpec& prior) const {
    if (n_values.size() < 3) throw ConfigError("rate experiment needs >= 3 values of N");
    for (std::size_t i = 0; i + 1 < n_values.size(); ++i)
      if (n_values[i] >= n_values[i + 1])
        throw ConfigError("rate n_values must be strictly increasing");
    if (n_values.front() < 1) throw ConfigError("rate n_values must be positive");
    if (replicates < 1) throw ConfigError("rate replicates must be >= 1");
    double m = 2.0;
    double nu_min =
        std::max(2.0 * m / (2.0 * (prior.alpha - prior.beta) - m), m / prior.beta);
    if (!(nu > nu_min))
      throw ConfigError("rate nu=" + fmt_g17(nu) + " must exceed the admissible bound " +
                        fmt_g17(nu_min));
    chain.validate();
  }
};

struct RateRun {
  long n = 0;
  int replicate = 0;
  double error = 0.0;
  double accept_rate = 0.0;
  double min_ess = 0.0;
  bool flagged = false;
};

struct RateReport {
  std::vector<long> n_values;
  std::vector<double> errors;   // per-N mean over unflagged replicates
  std::vector<double> stderrs;  // per-N standard error
  std::vector<double> delta_schedule;
  std::vector<RateRun> runs;
  double fitted_slope = 0.0;
  double r_squared = 0.0;
  double target_omega = 0.25;
  double rate_nu = 4.4;
  int flagged_count = 0;

  nlohmann::json to_json() const {
    nlohmann::json runs_j = nlohmann::json::array();
    for (const auto& r : runs)
      runs_j.push_back({{"n", r.n},
                        {"replicate", r.replicate},
                        {"error", r.error},
                        {"accept_rate", r.accept_rate},
                        {"min_ess", r.min_ess},
                        {"flagged", r.flagged}});
    return {{"n_values", n_values},
            {"errors", errors},
            {"stderrs", stderrs},
            {"delta_schedule", delta_schedule},
            {"fitted_slope", fitted_slope},
            {"r_squared", r_squared},
            {"target_omega", target_omega},
            {"rate_nu", rate_nu},
            {"flagged_count", flagged_count},
            {"runs", runs_j}};
  }

  void save_csv(const std::filesystem::path& path) const {
    CsvWriter w("n,replicate,error,accept_rate,min_ess,flagged");
    for (const auto& r : runs) {
      w.cell(static_cast<std::size_t>(r.n)).cell(r.replicate).cell(r.error);
      w.cell(r.accept_rate).cell(r.min_ess).cell(r.flagged ? 1 : 0);
      w.end_row();
    }
    w.save(path);
  }

  void save_plot_data(const std::filesystem::path& path) const {
    CsvWriter w("log_n,log_error,stderr,delta_n");
    for (std::size_t i = 0; i < n_values.size(); ++i) {
      w.cell(std::log(static_cast<double>(n_values[i]))).cell(std::log(errors[i]));
      w.cell(stderrs[i]).cell(delta_schedule[i]);
      w.end_row();
    }
    w.save(path);
  }
};

// Ordinary least squares of log(error) on log(N).
inline std::pair<double, double> fit_slope(const std::vector<long>& n_values,
                                           const std::vector<double>& errors) {
  if (n_values.size() != errors.size() || n_values.size() < 3)
    throw ValidationError("fit_slope needs >= 3 matched points");
  std::size_t n = n_values.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(errors[i] > 0.0)) throw ValidationError("fit_slope requires positive errors");
    xs[i] = std::log(static_cast<double>(n_values[i]));
    ys[i] = std::log(errors[i]);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw ValidationError("fit_slope: degenerate abscissae");
  double slope = sxy / sxx;
  double r2 = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return {slope, r2};
}

inline double delta_n(double nu, long n) {
  return std::pow(static_cast<double>(n), -1.0 / (2.0 + nu));
}

// Full experiment. Datasets are nested per replicate (one master dataset of
// max N per replicate; smaller N use its prefix), so the error at larger N
// reflects more data rather than a different noise realization.
inline RateReport run_rate_experiment(const ConformalField& truth,
                                      std::shared_ptr<const FourierBesselBasis> basis,
                                      const PriorSpec& prior, const RateOptions& opts,
                                      std::uint64_t master_seed, unsigned threads = 0) {
  opts.validate(prior);
  MembershipResult truth_check = check_membership(truth, prior);
  if (!truth_check.ok)
    throw ValidationError("rate experiment truth is outside the truncation set: " +
                          truth_check.reason);

  DistanceTable truth_table = build_table(truth, opts.data_table_k, {}, threads);

  long max_n = opts.n_values.back();
  std::vector<Dataset> master_data(static_cast<std::size_t>(opts.replicates));
  for (int r = 0; r < opts.replicates; ++r) {
    RngStream rng = RngStream::derive(master_seed, "rate-data", static_cast<std::uint64_t>(r));
    master_data[static_cast<std::size_t>(r)] =
        sample_dataset(truth, &truth_table, static_cast<std::size_t>(max_n), rng, ZMode::fast,
                       {}, opts.noise);
    master_data[static_cast<std::size_t>(r)].seed = master_seed;
  }

  std::size_t n_runs = opts.n_values.size() * static_cast<std::size_t>(opts.replicates);
  std::vector<RateRun> runs(n_runs);
  std::vector<double> sig = prior.mode_stddevs();

  parallel_for(
      n_runs,
      [&](std::size_t task) {
        std::size_t ni = task / static_cast<std::size_t>(opts.replicates);
        int rep = static_cast<int>(task % static_cast<std::size_t>(opts.replicates));
        long n = opts.n_values[ni];
        Dataset data;
        data.truth_hash = master_data[static_cast<std::size_t>(rep)].truth_hash;
        data.records.assign(master_data[static_cast<std::size_t>(rep)].records.begin(),
                            master_data[static_cast<std::size_t>(rep)].records.begin() + n);
        PosteriorModel model(basis, prior, std::move(data), opts.chain_table_k, opts.chain_bvp);
        RngStream rng = RngStream::derive(master_seed, "rate-chain",
                                          (static_cast<std::uint64_t>(ni) << 32) |
                                              static_cast<std::uint64_t>(rep));
        std::vector<double> init(static_cast<std::size_t>(basis->mode_count()), 0.0);
        ChainResult chain = run_chain(model, sig, init, opts.chain, rng);
        ConformalField mean = posterior_mean(chain.samples, basis);
        RateRun& out = runs[task];
        out.n = n;
        out.replicate = rep;
        out.error = l2_error(mean, truth);
        out.accept_rate = chain.diag.accept_rate;
        out.min_ess = chain.diag.min_ess;
        out.flagged = chain.diag.accept_warning;
      },
      threads);

  RateReport rep;
  rep.n_values = opts.n_values;
  rep.runs = runs;
  rep.target_omega = opts.target_omega;
  rep.rate_nu = opts.nu;
  for (long n : opts.n_values) rep.delta_schedule.push_back(delta_n(opts.nu, n));
  for (const auto& r : runs) rep.flagged_count += r.flagged ? 1 : 0;
  if (rep.flagged_count > opts.max_flagged_fraction * static_cast<double>(n_runs))
    throw SolverError("rate experiment: " + std::to_string(rep.flagged_count) + " of " +
                      std::to_string(n_runs) + " chains flagged by diagnostics");

  for (std::size_t ni = 0; ni < opts.n_values.size(); ++ni) {
    double acc = 0.0;
    int cnt = 0;
    for (const auto& r : runs)
      if (r.n == opts.n_values[ni] && !r.flagged) {
        acc += r.error;
        ++cnt;
      }
    if (cnt == 0) throw SolverError("rate experiment: all replicates flagged at one N");
    double mean = acc / cnt;
    double sv = 0.0;
    for (const auto& r : runs)
      if (r.n == opts.n_values[ni] && !r.flagged) sv += sqr(r.error - mean);
    rep.errors.push_back(mean);
    rep.stderrs.push_back(cnt > 1 ? std::sqrt(sv / (cnt - 1) / cnt) : 0.0);
  }

  auto [slope, r2] = fit_slope(rep.n_values, rep.errors);
  rep.fitted_slope = slope;
  rep.r_squared = r2;
  return rep;
}

}  // namespace tomo
