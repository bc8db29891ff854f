#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "tomo/tomo.hpp"

namespace fs = std::filesystem;
using namespace tomo;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNonSimple = 3;
constexpr int kExitSolver = 4;

struct CliArgs {
  std::string config_path;
  std::string out_dir = "out";
  unsigned threads = 0;
  bool threads_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig load_config(const CliArgs& args) {
  RunConfig cfg = RunConfig::load(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (args.threads_set) cfg.threads = args.threads;
  return cfg;
}

void write_field(const fs::path& dir, const ConformalField& field, const std::string& stem) {
  write_text_file(dir / (stem + ".json"), field.to_json().dump(2) + "\n");
}

int cmd_forward(const CliArgs& args) {
  RunConfig cfg = load_config(args);
  fs::create_directories(args.out_dir);
  auto basis = FourierBesselBasis::get(cfg.domain, cfg.modes);
  ConformalField field = cfg.field.resolve(basis, cfg.prior, cfg.seed);
  SimplicityCertificate cert = certify_simplicity(field, cfg.certify);
  write_text_file(fs::path(args.out_dir) / "certificate.json", cert.to_json().dump(2) + "\n");
  write_field(args.out_dir, field, "field");
  if (!cert.is_simple)
    throw NonSimpleError("field failed simplicity certification (min exp-map determinant " +
                         fmt_g17(cert.min_jacobi_det) + ")");
  DistanceTable table = build_table(field, cfg.table_k, cfg.bvp, cfg.threads);
  table.save_csv(fs::path(args.out_dir) / "table.csv");
  table.save_binary(fs::path(args.out_dir) / "gamma.f64", fs::path(args.out_dir) / "gamma.json");
  std::printf("forward: K=%d max_residual=%.3g ell=%.4f L=%.4f\n", table.K(),
              table.stats.max_residual, cert.ell, cert.big_l);
  return 0;
}

int cmd_stability(const CliArgs& args) {
  RunConfig cfg = load_config(args);
  fs::create_directories(args.out_dir);
  auto basis = FourierBesselBasis::get(cfg.domain, cfg.modes);

  std::vector<std::pair<ConformalField, ConformalField>> pairs;
  for (const auto& [a, b] : cfg.stability_pairs)
    pairs.emplace_back(a.resolve(basis, cfg.prior, cfg.seed),
                       b.resolve(basis, cfg.prior, cfg.seed));
  for (int p = 0; p < cfg.stability_prior_pairs; ++p) {
    FieldSource a, b;
    a.prior_draw = static_cast<std::uint64_t>(2 * p);
    b.prior_draw = static_cast<std::uint64_t>(2 * p + 1);
    pairs.emplace_back(a.resolve(basis, cfg.prior, cfg.seed),
                       b.resolve(basis, cfg.prior, cfg.seed));
  }
  if (pairs.empty()) throw ConfigError("stability: no pairs configured");

  std::vector<StabilityReport> reports;
  double worst_mukhometov = 0.0;
  for (const auto& [fa, fb] : pairs) {
    DistanceTable ta = build_table(fa, cfg.table_k, cfg.bvp, cfg.threads);
    DistanceTable tb = build_table(fb, cfg.table_k, cfg.bvp, cfg.threads);
    StabilityReport mk = mukhometov_check(ta, tb, fa, fb, cfg.quad_n);
    StabilityReport fw = forward_check(ta, tb, fa, fb, cfg.quad_n);
    auto [zi, zf] = z_level_checks(ta, tb, fa, fb, cfg.quad_n);
    worst_mukhometov = std::max(worst_mukhometov, mk.ratio);
    reports.push_back(mk);
    reports.push_back(fw);
    reports.push_back(zi);
    reports.push_back(zf);
  }
  append_reports(fs::path(args.out_dir) / "ledger.csv", reports);
  nlohmann::json summary = {{"pairs", pairs.size()},
                            {"max_mukhometov_ratio", worst_mukhometov}};
  write_text_file(fs::path(args.out_dir) / "summary.json", summary.dump(2) + "\n");
  std::printf("stability: %zu pairs, max mukhometov ratio %.4f\n", pairs.size(),
              worst_mukhometov);
  return 0;
}

int cmd_invert(const CliArgs& args) {
  RunConfig cfg = load_config(args);
  fs::create_directories(args.out_dir);
  auto basis = FourierBesselBasis::get(cfg.domain, cfg.modes);
  ConformalField truth = cfg.field.resolve(basis, cfg.prior, cfg.seed);

  MembershipResult member = check_membership(truth, cfg.prior);
  if (!member.ok && member.reason != "c3_bound")
    throw NonSimpleError("invert: truth field failed membership: " + member.reason);

  DistanceTable truth_table = build_table(truth, cfg.table_k, cfg.bvp, cfg.threads);
  RngStream data_rng = RngStream::derive(cfg.seed, "data");
  Dataset data = sample_dataset(truth, &truth_table, cfg.data_n, data_rng, cfg.data_mode,
                                cfg.bvp, cfg.data_noise);
  data.seed = cfg.seed;
  data.save_csv(fs::path(args.out_dir) / "dataset.csv");
  write_text_file(fs::path(args.out_dir) / "dataset.json", data.metadata().dump(2) + "\n");

  std::vector<double> sig = cfg.prior.mode_stddevs();
  std::vector<ChainResult> chains(static_cast<std::size_t>(cfg.n_chains));
  parallel_for(
      chains.size(),
      [&](std::size_t c) {
        PosteriorModel model(basis, cfg.prior, data, cfg.chain_table_k);
        RngStream rng = RngStream::derive(cfg.seed, "chain", c);
        std::vector<double> init(static_cast<std::size_t>(cfg.modes), 0.0);
        chains[c] = run_chain(model, sig, init, cfg.mcmc, rng);
      },
      cfg.threads);

  std::vector<std::vector<double>> pooled;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    chains[c].save(args.out_dir, "chain" + std::to_string(c));
    pooled.insert(pooled.end(), chains[c].samples.begin(), chains[c].samples.end());
  }
  ConformalField mean = posterior_mean(pooled, basis, CacheTier::high);
  write_field(args.out_dir, mean, "posterior_mean");

  nlohmann::json diag;
  diag["n_chains"] = cfg.n_chains;
  diag["n_samples"] = pooled.size();
  diag["l2_error_vs_truth"] = l2_error(mean, truth, cfg.quad_n);
  double acc = 0.0, min_ess = std::numeric_limits<double>::infinity();
  bool warn = false;
  for (const auto& ch : chains) {
    acc += ch.diag.accept_rate;
    min_ess = std::min(min_ess, ch.diag.min_ess);
    warn = warn || ch.diag.accept_warning;
  }
  diag["mean_accept_rate"] = acc / cfg.n_chains;
  diag["min_ess"] = min_ess;
  diag["accept_warning"] = warn;
  if (cfg.n_chains >= 2 && chains[0].samples.size() >= 4) {
    std::vector<std::vector<std::vector<double>>> seqs;
    for (const auto& ch : chains) seqs.push_back(ch.samples);
    diag["split_rhat"] = split_rhat(seqs);
  }
  write_text_file(fs::path(args.out_dir) / "posterior_diag.json", diag.dump(2) + "\n");
  std::printf("invert: %d chains, accept %.3f, l2 error %.5f\n", cfg.n_chains,
              acc / cfg.n_chains, diag["l2_error_vs_truth"].get<double>());
  return 0;
}

int cmd_rate(const CliArgs& args) {
  RunConfig cfg = load_config(args);
  fs::create_directories(args.out_dir);
  auto basis = FourierBesselBasis::get(cfg.domain, cfg.modes);
  ConformalField truth = cfg.field.resolve(basis, cfg.prior, cfg.seed);
  RateReport report = run_rate_experiment(truth, basis, cfg.prior, cfg.rate, cfg.seed,
                                          cfg.threads);
  write_text_file(fs::path(args.out_dir) / "rate_report.json", report.to_json().dump(2) + "\n");
  report.save_csv(fs::path(args.out_dir) / "rate_report.csv");
  report.save_plot_data(fs::path(args.out_dir) / "rate_plot.csv");
  std::printf("rate: slope %.4f (r2 %.3f), errors", report.fitted_slope, report.r_squared);
  for (double e : report.errors) std::printf(" %.5f", e);
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"travel-time tomography on the unit disk"};
  app.require_subcommand(1);
  CliArgs args;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "JSON config file")->required();
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--threads", args.threads, "worker threads (0 = hardware)")
        ->each([&](const std::string&) { args.threads_set = true; });
    sub->add_option("--seed", args.seed, "master seed (overrides config)")
        ->each([&](const std::string&) { args.seed_set = true; });
  };

  CLI::App* forward = app.add_subcommand("forward", "build a boundary distance table");
  CLI::App* stability = app.add_subcommand("stability", "run stability inequality checks");
  CLI::App* invert = app.add_subcommand("invert", "posterior sampling for one dataset");
  CLI::App* rate = app.add_subcommand("rate", "posterior contraction rate experiment");
  for (CLI::App* sub : {forward, stability, invert, rate}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kExitConfig : 0;
  }

  try {
    if (forward->parsed()) return cmd_forward(args);
    if (stability->parsed()) return cmd_stability(args);
    if (invert->parsed()) return cmd_invert(args);
    if (rate->parsed()) return cmd_rate(args);
    std::fprintf(stderr, "error: no subcommand\n");
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const NonSimpleError& e) {
    std::fprintf(stderr, "non-simple field: %s\n", e.what());
    return kExitNonSimple;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
}
