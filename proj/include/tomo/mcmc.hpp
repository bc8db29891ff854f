#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tomo/common.hpp"
#include "tomo/distance.hpp"
#include "tomo/field.hpp"
#include "tomo/io.hpp"
#include "tomo/quadrature.hpp"
#include "tomo/rng.hpp"
#include "tomo/statmodel.hpp"

namespace tomo {

// Preconditioned Crank-Nicolson random walk over prior coefficients. The
// proposal sqrt(1-s^2) theta + s xi with xi a fresh prior draw leaves the
// Gaussian reference measure invariant; rejecting proposals outside the
// truncation set preserves the restricted prior, and the acceptance rule
// then needs only the likelihood ratio.

struct PcnOptions {
  long n_steps = 2000;
  long burn_in = 500;
  long thinning = 5;
  double step_size = 0.3;
  double target_accept = 0.25;
  double accept_band = 0.1;
  long adapt_interval = 50;

  void validate() const {
    if (n_steps <= burn_in) throw ConfigError("mcmc n_steps must exceed burn_in");
    if (burn_in < 0 || thinning < 1) throw ConfigError("mcmc burn_in/thinning invalid");
    if (!(step_size > 0.0) || !(step_size < 1.0))
      throw ConfigError("mcmc step_size must be in (0,1)");
    if (adapt_interval < 1) throw ConfigError("mcmc adapt_interval must be >= 1");
  }
};

struct ChainDiagnostics {
  double accept_rate = 0.0;  // post burn-in
  long proposed = 0;
  long accepted = 0;
  long membership_rejects = 0;
  double final_step = 0.0;
  std::vector<double> step_schedule;
  std::vector<double> ess;
  double min_ess = 0.0;
  bool accept_warning = false;  // post burn-in acceptance outside (0.05, 0.95)

  nlohmann::json to_json() const {
    return {{"accept_rate", accept_rate},
            {"proposed", proposed},
            {"accepted", accepted},
            {"membership_rejects", membership_rejects},
            {"final_step", final_step},
            {"step_schedule", step_schedule},
            {"ess", ess},
            {"min_ess", min_ess},
            {"accept_warning", accept_warning}};
  }
};

struct ChainResult {
  std::vector<std::vector<double>> samples;  // thinned, post burn-in
  ChainDiagnostics diag;

  void save(const std::filesystem::path& dir, const std::string& stem = "chain") const {
    std::size_t n = samples.size();
    std::size_t J = n ? samples[0].size() : 0;
    std::vector<double> flat(n * J);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < J; ++j) flat[i * J + j] = samples[i][j];
    write_f64_matrix(dir / (stem + ".f64"), flat);
    nlohmann::json meta = diag.to_json();
    meta["n_samples"] = n;
    meta["n_modes"] = J;
    write_text_file(dir / (stem + ".json"), meta.dump(2) + "\n");
    std::string header = "sample";
    for (std::size_t j = 0; j < J; ++j) header += ",c" + std::to_string(j);
    CsvWriter w(header);
    for (std::size_t i = 0; i < n; ++i) {
      w.cell(i);
      for (std::size_t j = 0; j < J; ++j) w.cell(samples[i][j]);
      w.end_row();
    }
    w.save(dir / (stem + "_trace.csv"));
  }
};

// One proposal/accept cycle. Returns true when the proposal was accepted;
// `coeffs` and `log_like` are updated in place.
template <typename Model>
bool pcn_step(Model& model, std::vector<double>& coeffs, double& log_like, double step_size,
              const std::vector<double>& stddevs, RngStream& rng, ChainDiagnostics& diag) {
  std::size_t J = stddevs.size();
  std::vector<double> prop(coeffs.size(), 0.0);
  double keep = std::sqrt(1.0 - step_size * step_size);
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    double xi = (j < J) ? stddevs[j] * rng.normal() : 0.0;
    prop[j] = keep * coeffs[j] + step_size * xi;
  }
  ++diag.proposed;
  if (!model.membership(prop)) {
    ++diag.membership_rejects;
    return false;
  }
  double llp = model.log_like(prop);
  if (std::log(rng.uniform()) < llp - log_like) {
    coeffs = std::move(prop);
    log_like = llp;
    model.on_accept();
    ++diag.accepted;
    return true;
  }
  return false;
}

// Effective sample size by the batch-means variance ratio.
inline double ess_batch_means(const std::vector<double>& x) {
  std::size_t n = x.size();
  if (n < 8) return static_cast<double>(n);
  std::size_t b = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  std::size_t nb = n / b;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += sqr(v - mean);
  var /= static_cast<double>(n);
  if (var <= 0.0) return static_cast<double>(n);
  double bvar = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    double bm = 0.0;
    for (std::size_t i = 0; i < b; ++i) bm += x[k * b + i];
    bm /= static_cast<double>(b);
    bvar += sqr(bm - mean);
  }
  bvar /= static_cast<double>(nb);
  double tau = static_cast<double>(b) * bvar / var;
  if (tau < 1.0) tau = 1.0;
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

template <typename Model>
ChainResult run_chain(Model& model, const std::vector<double>& stddevs,
                      std::vector<double> init, const PcnOptions& opts, RngStream& rng) {
  opts.validate();
  ChainResult out;
  if (!model.membership(init))
    throw ValidationError("chain initial state is outside the truncation set");
  double ll = model.log_like(init);
  model.on_accept();
  std::vector<double> state = std::move(init);

  double s = opts.step_size;
  out.diag.step_schedule.push_back(s);
  long window_prop = 0, window_acc = 0;
  long post_prop = 0, post_acc = 0;

  for (long step = 0; step < opts.n_steps; ++step) {
    long acc_before = out.diag.accepted;
    pcn_step(model, state, ll, s, stddevs, rng, out.diag);
    bool accepted = out.diag.accepted > acc_before;

    if (step < opts.burn_in) {
      ++window_prop;
      if (accepted) ++window_acc;
      if (window_prop == opts.adapt_interval) {
        double rate = static_cast<double>(window_acc) / window_prop;
        if (rate > opts.target_accept + opts.accept_band)
          s = std::min(0.999, s * 1.25);
        else if (rate < opts.target_accept - opts.accept_band)
          s = std::max(1e-4, s / 1.25);
        out.diag.step_schedule.push_back(s);
        window_prop = window_acc = 0;
      }
    } else {
      ++post_prop;
      if (accepted) ++post_acc;
      if ((step - opts.burn_in) % opts.thinning == 0) out.samples.push_back(state);
    }
  }

  out.diag.final_step = s;
  out.diag.accept_rate = post_prop ? static_cast<double>(post_acc) / post_prop : 0.0;
  out.diag.accept_warning = out.diag.accept_rate <= 0.05 || out.diag.accept_rate >= 0.95;

  std::size_t J = state.size();
  out.diag.ess.assign(J, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<double> series(out.samples.size());
    for (std::size_t i = 0; i < series.size(); ++i) series[i] = out.samples[i][j];
    out.diag.ess[j] = ess_batch_means(series);
  }
  out.diag.min_ess = out.diag.ess.empty()
                         ? 0.0
                         : *std::min_element(out.diag.ess.begin(), out.diag.ess.end());
  return out;
}

// Split convergence statistic across chains: each chain is halved, and the
// between/within variance ratio is reported per coefficient (max over all).
inline double split_rhat(const std::vector<std::vector<std::vector<double>>>& chains) {
  if (chains.empty() || chains[0].empty()) throw ValidationError("split_rhat needs samples");
  std::size_t J = chains[0][0].size();
  std::size_t half = chains[0].size() / 2;
  if (half < 2) throw ValidationError("split_rhat needs at least 4 samples per chain");
  double worst = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<std::vector<double>> seqs;
    for (const auto& ch : chains) {
      std::vector<double> a, b;
      for (std::size_t i = 0; i < half; ++i) a.push_back(ch[i][j]);
      for (std::size_t i = half; i < 2 * half; ++i) b.push_back(ch[i][j]);
      seqs.push_back(std::move(a));
      seqs.push_back(std::move(b));
    }
    double n = static_cast<double>(half);
    double m = static_cast<double>(seqs.size());
    std::vector<double> means(seqs.size());
    double grand = 0.0;
    for (std::size_t k = 0; k < seqs.size(); ++k) {
      double mu = 0.0;
      for (double v : seqs[k]) mu += v;
      means[k] = mu / n;
      grand += means[k];
    }
    grand /= m;
    double B = 0.0;
    for (double mu : means) B += sqr(mu - grand);
    B *= n / (m - 1);
    double W = 0.0;
    for (std::size_t k = 0; k < seqs.size(); ++k) {
      double sv = 0.0;
      for (double v : seqs[k]) sv += sqr(v - means[k]);
      W += sv / (n - 1);
    }
    W /= m;
    if (W <= 0.0) continue;  // constant coefficient, no spread to diagnose
    double vhat = (n - 1) / n * W + B / n;
    worst = std::max(worst, std::sqrt(vhat / W));
  }
  return worst;
}

inline std::vector<double> mean_coefficients(const std::vector<std::vector<double>>& samples) {
  if (samples.empty()) throw ValidationError("posterior mean of an empty sample list");
  std::vector<double> mean(samples[0].size(), 0.0);
  for (const auto& s : samples)
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += s[j];
  for (double& v : mean) v /= static_cast<double>(samples.size());
  return mean;
}

// Coefficient-wise average rebuilt as a field. The mean may leave the
// truncation set; it is still a valid field and a valid estimator.
inline ConformalField posterior_mean(const std::vector<std::vector<double>>& samples,
                                     std::shared_ptr<const FourierBesselBasis> basis,
                                     CacheTier tier = CacheTier::fast) {
  return ConformalField::build(std::move(basis), mean_coefficients(samples), tier);
}

// L2(disk) error of the exponent c between estimate and truth.
inline double l2_error(const ConformalField& estimate, const ConformalField& truth,
                       int quad_n = 256) {
  return field_l2_diff(estimate, truth, false, quad_n);
}

// ============================================================================
// Models pluggable into the kernel
// ============================================================================

// Arbitrary membership and likelihood functors; the default-constructed
// model is the unrestricted constant-likelihood chain.
struct FunctorModel {
  std::function<bool(const std::vector<double>&)> member;
  std::function<double(const std::vector<double>&)> loglike;

  bool membership(const std::vector<double>& c) { return member ? member(c) : true; }
  double log_like(const std::vector<double>& c) { return loglike ? loglike(c) : 0.0; }
  void on_accept() {}
};

// Full posterior target: membership is the truncation-set check on the built
// field; the likelihood interpolates log distances from a reduced-K table
// built per proposal, warm-started from the last accepted state's table.
class PosteriorModel {
 public:
  PosteriorModel(std::shared_ptr<const FourierBesselBasis> basis, PriorSpec prior, Dataset data,
                 int table_k = 32, BvpOptions bvp = make_bvp_defaults(),
                 CacheTier tier = CacheTier::fast)
      : basis_(std::move(basis)),
        prior_(std::move(prior)),
        data_(std::move(data)),
        table_k_(table_k),
        bvp_(bvp),
        tier_(tier) {}

  static BvpOptions make_bvp_defaults() {
    BvpOptions b;
    b.arc_tol = 1e-7;
    b.fan_size = 64;
    b.shoot.step = 4e-3;
    return b;
  }

  bool membership(const std::vector<double>& coeffs) {
    pending_field_.emplace(ConformalField::build(basis_, coeffs, tier_));
    MembershipResult m = check_membership(*pending_field_, prior_);
    if (!m.ok) pending_field_.reset();
    return m.ok;
  }

  double log_like(const std::vector<double>& coeffs) {
    if (!pending_field_ || pending_field_->coefficients() != coeffs)
      pending_field_.emplace(ConformalField::build(basis_, coeffs, tier_));
    pending_table_.emplace(build_table(*pending_field_, table_k_, bvp_, 1,
                                       accepted_table_ ? &*accepted_table_ : nullptr));
    FastZ fz(*pending_table_);
    return log_likelihood([&](double tx, double ty) { return fz(tx, ty); }, data_);
  }

  void on_accept() {
    if (pending_table_) accepted_table_ = std::move(pending_table_);
    pending_table_.reset();
    pending_field_.reset();
  }

  const Dataset& data() const { return data_; }

 private:
  std::shared_ptr<const FourierBesselBasis> basis_;
  PriorSpec prior_;
  Dataset data_;
  int table_k_;
  BvpOptions bvp_;
  CacheTier tier_;
  std::optional<ConformalField> pending_field_;
  std::optional<DistanceTable> pending_table_, accepted_table_;
};

}  // namespace tomo
