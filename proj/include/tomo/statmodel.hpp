#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tomo/common.hpp"
#include "tomo/distance.hpp"
#include "tomo/field.hpp"
#include "tomo/geodesics.hpp"
#include "tomo/io.hpp"
#include "tomo/rng.hpp"

namespace tomo {

// Measurement model: observations (X_i, Y_i, Z_i) with (X_i, Y_i) uniform on
// the boundary torus and Z_i = log Gamma(X_i, Y_i) + eps_i, eps_i ~ N(0,1).
// Noise level is fixed to 1 throughout.

struct DataRecord {
  double theta_x = 0.0;
  double theta_y = 0.0;
  double z = 0.0;
};

struct Dataset {
  std::vector<DataRecord> records;
  std::uint64_t seed = 0;
  std::uint64_t truth_hash = 0;
  long resamples = 0;

  std::size_t size() const { return records.size(); }

  void save_csv(const std::filesystem::path& path) const {
    CsvWriter w("theta_x,theta_y,z");
    for (const auto& r : records) {
      w.cell(r.theta_x).cell(r.theta_y).cell(r.z);
      w.end_row();
    }
    w.save(path);
  }

  nlohmann::json metadata() const {
    return {{"seed", seed},
            {"n", records.size()},
            {"truth_hash", hex_u64(truth_hash)},
            {"resamples", resamples}};
  }
};

enum class ZMode { exact, fast };

// Draw a dataset from a field. Exact mode solves the BVP at every sampled
// pair; fast mode interpolates the supplied table. A failed solve (or a
// degenerate coincident pair) is resampled with the count recorded.
inline Dataset sample_dataset(const ConformalField& field, const DistanceTable* table,
                              std::size_t n_obs, RngStream& rng, ZMode mode = ZMode::exact,
                              const BvpOptions& opts = {}, double noise = 1.0) {
  Dataset out;
  out.seed = 0;
  out.truth_hash = field.hash();
  out.records.reserve(n_obs);
  std::optional<FastZ> fz;
  if (mode == ZMode::fast) {
    if (!table) throw ValidationError("fast dataset mode requires a distance table");
    fz.emplace(*table);
  }
  for (std::size_t i = 0; i < n_obs; ++i) {
    for (;;) {
      double tx = rng.uniform() * kTwoPi;
      double ty = rng.uniform() * kTwoPi;
      if (chord_length(tx, ty) <= 0.0) {
        ++out.resamples;
        continue;
      }
      double zc;
      if (mode == ZMode::fast) {
        zc = (*fz)(tx, ty);
      } else {
        try {
          zc = std::log(boundary_distance(field, tx, ty, opts).gamma);
        } catch (const SolverError&) {
          ++out.resamples;
          continue;
        }
      }
      out.records.push_back({tx, ty, zc + noise * rng.normal()});
      break;
    }
  }
  double frac = n_obs ? static_cast<double>(out.resamples) / n_obs : 0.0;
  if (frac >= 1e-3)
    throw SolverError("dataset resample fraction " + fmt_g17(frac) + " exceeds 0.1%");
  return out;
}

// Gaussian log likelihood of a dataset given a log-distance evaluator.
template <typename ZFn>
double log_likelihood(ZFn&& field_z, const Dataset& data) {
  double acc = 0.0;
  for (const auto& r : data.records) {
    double resid = r.z - field_z(r.theta_x, r.theta_y);
    acc += -0.5 * resid * resid;
  }
  return acc - 0.5 * std::log(kTwoPi) * static_cast<double>(data.records.size());
}

// ============================================================================
// Information distances between the data laws of two fields
// ============================================================================

// All three reduce to torus averages of powers of D = Z1 - Z2 under the
// uniform pair distribution; the near-diagonal band has D identically zero
// (both distances are the exact chord there), so band cells contribute the
// integrand's value at D = 0.

namespace detail {

template <typename F>
double torus_mean(const DistanceTable& a, const DistanceTable& b, F&& of_d) {
  if (a.K() != b.K()) throw ValidationError("table K mismatch");
  int K = a.K();
  double acc = 0.0;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      double d = (a.band(i, j) || b.band(i, j)) ? 0.0 : a.z(i, j) - b.z(i, j);
      acc += of_d(d);
    }
  return acc / (static_cast<double>(K) * K);
}

}  // namespace detail

// KL(p1 || p2) = E[D^2] / 2 under the unit-variance Gaussian model.
inline double kl_divergence(const DistanceTable& t1, const DistanceTable& t2) {
  return 0.5 * detail::torus_mean(t1, t2, [](double d) { return d * d; });
}

// Hellinger affinity rho = E[exp(-D^2/8)].
inline double hellinger_affinity(const DistanceTable& t1, const DistanceTable& t2) {
  return detail::torus_mean(t1, t2, [](double d) { return std::exp(-d * d / 8.0); });
}

// Hellinger distance h = sqrt(2 (1 - rho)).
inline double hellinger(const DistanceTable& t1, const DistanceTable& t2) {
  return std::sqrt(std::max(0.0, 2.0 * (1.0 - hellinger_affinity(t1, t2))));
}

// Exact second moment of the log likelihood ratio under p1:
// V = E[(D^2/2 - eps D)^2] = E[D^4]/4 + E[D^2].
inline double variance_proxy(const DistanceTable& t1, const DistanceTable& t2) {
  return detail::torus_mean(t1, t2,
                            [](double d) { return 0.25 * d * d * d * d + d * d; });
}

// Two-sided control of h^2 by the normalized second moment E[D^2]:
//   kappa E[D^2] <= h^2 <= E[D^2]/4,
// kappa = (1 - e^{-T})/(4T), T = Delta^2/8, Delta = 2M + log(diam) - log(delta)
// with M a sup bound for |c| valid for both fields (here the scanned bound of
// the pair, the lemma's constant for the smallest class containing both).
struct HellingerSandwich {
  double h2 = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double kappa = 0.0;
  double delta_bound = 0.0;
  bool ok = false;
};

inline HellingerSandwich hellinger_sandwich(const DistanceTable& t1, const DistanceTable& t2,
                                            const ConformalField& f1, const ConformalField& f2) {
  HellingerSandwich s;
  double m_pair = std::max(std::max(std::fabs(f1.c_min()), std::fabs(f1.c_max())),
                           std::max(std::fabs(f2.c_min()), std::fabs(f2.c_max())));
  double diam = 2.0 * f1.domain().outer_radius;
  s.delta_bound = 2.0 * m_pair + std::log(diam) - std::log(t1.delta());
  double T = s.delta_bound * s.delta_bound / 8.0;
  s.kappa = (1.0 - std::exp(-T)) / (4.0 * T);
  double second = 2.0 * kl_divergence(t1, t2);  // E[D^2]
  double h = hellinger(t1, t2);
  s.h2 = h * h;
  s.lower = s.kappa * second;
  s.upper = 0.25 * second;
  s.ok = s.lower <= s.h2 * (1 + 1e-9) + 1e-15 && s.h2 <= s.upper * (1 + 1e-9) + 1e-15;
  return s;
}

// Monte-Carlo oracles for the closed forms: sample (X, Y) uniform, Z from
// p1, and average the defining statistics.
struct McInfo {
  double kl = 0.0;
  double hellinger = 0.0;
  double variance = 0.0;
};

inline McInfo mc_info_distances(const FastZ& z1, const FastZ& z2, std::size_t n, RngStream& rng) {
  double acc_kl = 0.0, acc_rho = 0.0, acc_v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double tx = rng.uniform() * kTwoPi;
    double ty = rng.uniform() * kTwoPi;
    if (chord_length(tx, ty) <= 0.0) {
      --i;
      continue;
    }
    double d = z1(tx, ty) - z2(tx, ty);
    double eps = rng.normal();
    double log_ratio = 0.5 * d * d - eps * d;
    acc_kl += log_ratio;
    acc_v += log_ratio * log_ratio;
    acc_rho += std::exp(-0.5 * eps * d - 0.25 * d * d);  // sqrt(p2/p1) at the draw
  }
  McInfo m;
  m.kl = acc_kl / n;
  m.variance = acc_v / n;
  m.hellinger = std::sqrt(std::max(0.0, 2.0 * (1.0 - acc_rho / n)));
  return m;
}

// ============================================================================
// Truncated Gaussian prior on basis coefficients
// ============================================================================

struct PriorSpec {
  double alpha = 4.5;   // Gaussian regularity: sigma_j = scale * j^-(alpha/2 + 1/2)
  double beta = 3.0;    // Holder regularity of the support class
  int num_modes = 32;
  double scale = 0.15;
  double trunc_M = 150.0;   // C^3 bound of the truncation set
  double trunc_ell = 0.1;   // lower bound on the certified exp-derivative
  int max_rejections = 2000;
  CertifyOptions certify = make_certify_defaults();

  static CertifyOptions make_certify_defaults() {
    CertifyOptions c;
    c.angular_samples = 16;
    c.direction_samples = 48;
    c.step = 2e-3;
    c.trace_resolution = 0.02;
    return c;
  }

  void validate() const {
    if (!(alpha > beta + 1.0))
      throw ConfigError("prior alpha must exceed beta + 1 (m = 2)");
    if (!(beta >= 3.0)) throw ConfigError("prior beta must be >= 3");
    if (num_modes < 1) throw ConfigError("prior num_modes must be >= 1");
    if (!(scale >= 0.0)) throw ConfigError("prior scale must be >= 0");
    if (!(trunc_M > 0.0) || !(trunc_ell > 0.0) || trunc_ell >= 1.0)
      throw ConfigError("prior truncation bounds invalid");
    if (max_rejections < 1) throw ConfigError("prior max_rejections must be >= 1");
  }

  std::vector<double> mode_stddevs() const {
    std::vector<double> s(static_cast<std::size_t>(num_modes));
    for (int j = 0; j < num_modes; ++j)
      s[static_cast<std::size_t>(j)] = scale * std::pow(j + 1.0, -(alpha / 2.0 + 0.5));
    return s;
  }

  nlohmann::json to_json() const {
    return {{"alpha", alpha},
            {"beta", beta},
            {"num_modes", num_modes},
            {"scale", scale},
            {"trunc_M", trunc_M},
            {"trunc_ell", trunc_ell},
            {"max_rejections", max_rejections},
            {"certify",
             {{"angular_samples", certify.angular_samples},
              {"direction_samples", certify.direction_samples},
              {"step", certify.step},
              {"trace_resolution", certify.trace_resolution}}}};
  }

  static PriorSpec from_json(const nlohmann::json& j) {
    PriorSpec s;
    s.alpha = j.value("alpha", s.alpha);
    s.beta = j.value("beta", s.beta);
    s.num_modes = j.value("num_modes", s.num_modes);
    s.scale = j.value("scale", s.scale);
    s.trunc_M = j.value("trunc_M", s.trunc_M);
    s.trunc_ell = j.value("trunc_ell", s.trunc_ell);
    s.max_rejections = j.value("max_rejections", s.max_rejections);
    if (j.contains("certify")) {
      const auto& c = j.at("certify");
      s.certify.angular_samples = c.value("angular_samples", s.certify.angular_samples);
      s.certify.direction_samples = c.value("direction_samples", s.certify.direction_samples);
      s.certify.step = c.value("step", s.certify.step);
      s.certify.trace_resolution = c.value("trace_resolution", s.certify.trace_resolution);
    }
    s.validate();
    return s;
  }
};

// Membership in the truncation set: certified C^3 bound below M, simple
// metric, certified lower exponential-map bound at least trunc_ell.
struct MembershipResult {
  bool ok = false;
  double c3 = 0.0;
  std::string reason;
  SimplicityCertificate cert;
};

inline MembershipResult check_membership(const ConformalField& field, const PriorSpec& spec) {
  MembershipResult m;
  m.c3 = field.c3_bound();
  if (!(m.c3 < spec.trunc_M)) {
    m.reason = "c3_bound";
    return m;
  }
  try {
    m.cert = certify_simplicity(field, spec.certify);
  } catch (const NonSimpleError&) {
    m.reason = "trapped_ray";
    return m;
  }
  if (!m.cert.is_simple) {
    m.reason = "conjugate_point";
    return m;
  }
  if (!(m.cert.ell >= spec.trunc_ell)) {
    m.reason = "ell_bound";
    return m;
  }
  m.ok = true;
  return m;
}

struct PriorDrawStats {
  int attempts = 0;
  int rejects_c3 = 0;
  int rejects_simple = 0;
  int rejects_ell = 0;
};

// Rejection sampling of the restricted Gaussian: draw coefficients, build
// the field, keep the first draw inside the truncation set.
inline ConformalField sample_prior(std::shared_ptr<const FourierBesselBasis> basis,
                                   const PriorSpec& spec, RngStream& rng,
                                   CacheTier tier = CacheTier::fast,
                                   PriorDrawStats* stats = nullptr) {
  spec.validate();
  if (basis->mode_count() < spec.num_modes)
    throw ValidationError("basis has fewer modes than the prior spec");
  std::vector<double> sig = spec.mode_stddevs();
  for (int attempt = 0; attempt < spec.max_rejections; ++attempt) {
    std::vector<double> coeffs(static_cast<std::size_t>(basis->mode_count()), 0.0);
    for (int j = 0; j < spec.num_modes; ++j)
      coeffs[static_cast<std::size_t>(j)] = sig[static_cast<std::size_t>(j)] * rng.normal();
    ConformalField field = ConformalField::build(basis, coeffs, tier);
    MembershipResult m = check_membership(field, spec);
    if (stats) {
      ++stats->attempts;
      if (m.reason == "c3_bound") ++stats->rejects_c3;
      if (m.reason == "trapped_ray" || m.reason == "conjugate_point") ++stats->rejects_simple;
      if (m.reason == "ell_bound") ++stats->rejects_ell;
    }
    if (m.ok) return field;
  }
  throw ValidationError("prior truncation set rejected " + std::to_string(spec.max_rejections) +
                        " consecutive draws; check trunc_M/trunc_ell against the mode scale");
}

}  // namespace tomo
