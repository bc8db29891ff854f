#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tomo/common.hpp"
#include "tomo/experiments.hpp"
#include "tomo/field.hpp"
#include "tomo/mcmc.hpp"
#include "tomo/statmodel.hpp"

namespace tomo {

// One JSON config file drives every subcommand; seeds are mandatory and no
// run consults the clock.

struct FieldSource {
  std::string preset;
  std::vector<double> coefficients;
  std::optional<std::uint64_t> prior_draw;

  static FieldSource from_json(const nlohmann::json& j) {
    FieldSource s;
    if (j.contains("preset")) s.preset = j.at("preset").get<std::string>();
    if (j.contains("coefficients")) s.coefficients = j.at("coefficients").get<std::vector<double>>();
    if (j.contains("prior_draw")) s.prior_draw = j.at("prior_draw").get<std::uint64_t>();
    int set = (!s.preset.empty() ? 1 : 0) + (!s.coefficients.empty() ? 1 : 0) +
              (s.prior_draw ? 1 : 0);
    if (set != 1)
      throw ConfigError("field source must set exactly one of preset/coefficients/prior_draw");
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    if (!preset.empty()) j["preset"] = preset;
    if (!coefficients.empty()) j["coefficients"] = coefficients;
    if (prior_draw) j["prior_draw"] = *prior_draw;
    return j;
  }

  ConformalField resolve(std::shared_ptr<const FourierBesselBasis> basis, const PriorSpec& prior,
                         std::uint64_t master_seed, CacheTier tier = CacheTier::high) const {
    if (!preset.empty()) {
      std::vector<double> c = preset_coefficients(preset, basis->mode_count());
      return ConformalField::build(std::move(basis), std::move(c), tier);
    }
    if (!coefficients.empty()) {
      if (static_cast<int>(coefficients.size()) > basis->mode_count())
        throw ConfigError("field source has more coefficients than configured modes");
      std::vector<double> c = coefficients;
      c.resize(static_cast<std::size_t>(basis->mode_count()), 0.0);
      return ConformalField::build(std::move(basis), std::move(c), tier);
    }
    RngStream rng = RngStream::derive(master_seed, "prior", *prior_draw);
    return sample_prior(std::move(basis), prior, rng, tier);
  }
};

struct RunConfig {
  DomainSpec domain;
  int modes = 32;
  FieldSource field;

  int table_k = 64;
  BvpOptions bvp;
  CertifyOptions certify;
  double eikonal_h = 1.0 / 256;

  PriorSpec prior;

  std::size_t data_n = 1000;
  ZMode data_mode = ZMode::exact;
  double data_noise = 1.0;

  PcnOptions mcmc;
  int chain_table_k = 32;
  int n_chains = 2;

  RateOptions rate;

  std::vector<std::pair<FieldSource, FieldSource>> stability_pairs;
  int stability_prior_pairs = 0;
  int quad_n = 256;

  std::uint64_t seed = 1;
  unsigned threads = 0;

  static RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
      return from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config field error: ") + e.what());
    }
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("domain")) c.domain = DomainSpec::from_json(j.at("domain"));
    c.modes = j.value("modes", c.modes);
    if (c.modes < 1 || c.modes > 512) throw ConfigError("modes must be in [1, 512]");
    if (j.contains("field")) c.field = FieldSource::from_json(j.at("field"));
    else c.field.preset = "flat";

    if (j.contains("table")) {
      const auto& t = j.at("table");
      c.table_k = t.value("k", c.table_k);
      c.bvp.shoot.step = t.value("step", c.bvp.shoot.step);
      c.bvp.fan_size = t.value("fan", c.bvp.fan_size);
      c.bvp.arc_tol = t.value("arc_tol", c.bvp.arc_tol);
    }
    if (c.table_k < 32 || c.table_k > 1024) throw ConfigError("table k must be in [32, 1024]");
    c.bvp.shoot.validate();

    if (j.contains("certify")) {
      const auto& t = j.at("certify");
      c.certify.angular_samples = t.value("angular_samples", c.certify.angular_samples);
      c.certify.direction_samples = t.value("direction_samples", c.certify.direction_samples);
      c.certify.step = t.value("step", c.certify.step);
      c.certify.trace_resolution = t.value("trace_resolution", c.certify.trace_resolution);
    }
    c.eikonal_h = j.value("eikonal_h", c.eikonal_h);

    if (j.contains("prior")) c.prior = PriorSpec::from_json(j.at("prior"));
    if (c.prior.num_modes > c.modes)
      throw ConfigError("prior num_modes exceeds configured modes");

    if (j.contains("data")) {
      const auto& d = j.at("data");
      c.data_n = d.value("n", c.data_n);
      std::string mode = d.value("mode", std::string("exact"));
      if (mode == "exact") c.data_mode = ZMode::exact;
      else if (mode == "fast") c.data_mode = ZMode::fast;
      else throw ConfigError("data mode must be exact or fast");
      c.data_noise = d.value("noise", c.data_noise);
      if (c.data_noise < 0) throw ConfigError("data noise must be >= 0");
    }

    if (j.contains("mcmc")) {
      const auto& m = j.at("mcmc");
      c.mcmc.n_steps = m.value("n_steps", c.mcmc.n_steps);
      c.mcmc.burn_in = m.value("burn_in", c.mcmc.burn_in);
      c.mcmc.thinning = m.value("thinning", c.mcmc.thinning);
      c.mcmc.step_size = m.value("step_size", c.mcmc.step_size);
      c.mcmc.adapt_interval = m.value("adapt_interval", c.mcmc.adapt_interval);
      c.chain_table_k = m.value("table_k", c.chain_table_k);
      c.n_chains = m.value("chains", c.n_chains);
      if (c.n_chains < 1 || c.n_chains > 64) throw ConfigError("mcmc chains must be in [1, 64]");
    }
    c.mcmc.validate();

    if (j.contains("rate")) {
      const auto& r = j.at("rate");
      if (r.contains("n_values")) c.rate.n_values = r.at("n_values").get<std::vector<long>>();
      c.rate.replicates = r.value("replicates", c.rate.replicates);
      c.rate.nu = r.value("nu", c.rate.nu);
      c.rate.target_omega = r.value("target_omega", c.rate.target_omega);
      c.rate.data_table_k = r.value("data_table_k", c.rate.data_table_k);
      c.rate.chain_table_k = r.value("chain_table_k", c.rate.chain_table_k);
      c.rate.noise = r.value("noise", c.rate.noise);
      if (r.contains("chain")) {
        const auto& m = r.at("chain");
        c.rate.chain.n_steps = m.value("n_steps", c.rate.chain.n_steps);
        c.rate.chain.burn_in = m.value("burn_in", c.rate.chain.burn_in);
        c.rate.chain.thinning = m.value("thinning", c.rate.chain.thinning);
        c.rate.chain.step_size = m.value("step_size", c.rate.chain.step_size);
      }
    }
    c.rate.validate(c.prior);

    if (j.contains("stability")) {
      const auto& s = j.at("stability");
      if (s.contains("pairs")) {
        for (const auto& p : s.at("pairs")) {
          if (!p.is_array() || p.size() != 2)
            throw ConfigError("stability pairs must be two-element arrays");
          c.stability_pairs.emplace_back(FieldSource::from_json(p[0]),
                                         FieldSource::from_json(p[1]));
        }
      }
      c.stability_prior_pairs = s.value("prior_pairs", c.stability_prior_pairs);
      c.quad_n = s.value("quad_n", c.quad_n);
      if (c.quad_n < 64 || c.quad_n > 2048) throw ConfigError("quad_n must be in [64, 2048]");
      if (c.stability_prior_pairs < 0 || c.stability_prior_pairs > 256)
        throw ConfigError("stability prior_pairs must be in [0, 256]");
    }

    if (!j.contains("seed")) throw ConfigError("config must set a seed (no clock seeding)");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.threads = j.value("threads", 0u);
    return c;
  }
};

}  // namespace tomo
