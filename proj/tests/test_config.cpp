#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "tomo/tomo.hpp"

using namespace tomo;
namespace fs = std::filesystem;

static RunConfig parse(const std::string& text) {
  return RunConfig::from_json(nlohmann::json::parse(text));
}

TEST_CASE("full config round trip", "[config]") {
  RunConfig c = parse(R"({
    "seed": 42,
    "threads": 2,
    "modes": 48,
    "field": {"coefficients": [0.1, 0.0, 0.05]},
    "table": {"k": 96, "step": 0.002, "fan": 48, "arc_tol": 1e-8},
    "certify": {"angular_samples": 12, "direction_samples": 24},
    "eikonal_h": 0.0078125,
    "prior": {"alpha": 5.0, "num_modes": 16, "scale": 0.1},
    "data": {"n": 500, "mode": "fast", "noise": 0.5},
    "mcmc": {"n_steps": 3000, "burn_in": 1000, "thinning": 4, "step_size": 0.25,
             "adapt_interval": 100, "table_k": 48, "chains": 3},
    "rate": {"n_values": [100, 200, 400], "replicates": 2, "nu": 4.6, "noise": 0.8,
             "chain": {"n_steps": 500, "burn_in": 200}},
    "stability": {"pairs": [[{"preset": "flat"}, {"preset": "bump"}]],
                  "prior_pairs": 2, "quad_n": 128}
  })");
  CHECK(c.seed == 42);
  CHECK(c.threads == 2);
  CHECK(c.modes == 48);
  CHECK(c.field.coefficients.size() == 3);
  CHECK(c.table_k == 96);
  CHECK(c.bvp.shoot.step == 0.002);
  CHECK(c.bvp.fan_size == 48);
  CHECK(c.bvp.arc_tol == 1e-8);
  CHECK(c.certify.angular_samples == 12);
  CHECK(c.certify.direction_samples == 24);
  CHECK(c.eikonal_h == 0.0078125);
  CHECK(c.prior.alpha == 5.0);
  CHECK(c.prior.num_modes == 16);
  CHECK(c.prior.scale == 0.1);
  CHECK(c.data_n == 500);
  CHECK(c.data_mode == ZMode::fast);
  CHECK(c.data_noise == 0.5);
  CHECK(c.mcmc.n_steps == 3000);
  CHECK(c.mcmc.burn_in == 1000);
  CHECK(c.mcmc.thinning == 4);
  CHECK(c.mcmc.step_size == 0.25);
  CHECK(c.mcmc.adapt_interval == 100);
  CHECK(c.chain_table_k == 48);
  CHECK(c.n_chains == 3);
  CHECK(c.rate.n_values == std::vector<long>{100, 200, 400});
  CHECK(c.rate.replicates == 2);
  CHECK(c.rate.nu == 4.6);
  CHECK(c.rate.noise == 0.8);
  CHECK(c.rate.chain.n_steps == 500);
  CHECK(c.rate.chain.burn_in == 200);
  CHECK(c.stability_pairs.size() == 1);
  CHECK(c.stability_pairs[0].first.preset == "flat");
  CHECK(c.stability_pairs[0].second.preset == "bump");
  CHECK(c.stability_prior_pairs == 2);
  CHECK(c.quad_n == 128);
}

TEST_CASE("config defaults and mandatory seed", "[config]") {
  RunConfig c = parse(R"({"seed": 7})");
  CHECK(c.modes == 32);
  CHECK(c.field.preset == "flat");
  CHECK(c.table_k == 64);
  CHECK(c.data_mode == ZMode::exact);
  CHECK(c.n_chains == 2);
  CHECK(c.threads == 0);

  CHECK_THROWS_AS(parse(R"({})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"modes": 32})"), ConfigError);
}

TEST_CASE("config range validation", "[config]") {
  CHECK_THROWS_AS(parse(R"({"seed": 1, "modes": 0})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "modes": 513})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "table": {"k": 16}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "table": {"k": 2048}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "modes": 16, "prior": {"num_modes": 32}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "data": {"mode": "bogus"}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "data": {"noise": -1.0}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "mcmc": {"chains": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "mcmc": {"chains": 65}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "mcmc": {"step_size": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "stability": {"quad_n": 32}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "stability": {"prior_pairs": 300}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "rate": {"nu": 1.0}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seed": 1, "rate": {"n_values": [100]}})"), ConfigError);
}

TEST_CASE("field source selection", "[config]") {
  CHECK_THROWS_AS(FieldSource::from_json(nlohmann::json::object()), ConfigError);
  CHECK_THROWS_AS(FieldSource::from_json({{"preset", "flat"}, {"prior_draw", 0}}),
                  ConfigError);

  DomainSpec dom;
  auto basis = FourierBesselBasis::get(dom, 32);
  PriorSpec prior;

  FieldSource pre;
  pre.preset = "bump";
  ConformalField f1 = pre.resolve(basis, prior, 1, CacheTier::fast);
  CHECK(f1.coefficients()[0] == 0.2);

  FieldSource coef;
  coef.coefficients = {0.05, 0.01};
  ConformalField f2 = coef.resolve(basis, prior, 1, CacheTier::fast);
  CHECK(f2.coefficients().size() == 32);
  CHECK(f2.coefficients()[1] == 0.01);
  CHECK(f2.coefficients()[5] == 0.0);

  FieldSource wide;
  wide.coefficients.assign(40, 0.01);
  CHECK_THROWS_AS(wide.resolve(basis, prior, 1, CacheTier::fast), ConfigError);

  FieldSource draw;
  draw.prior_draw = 3;
  ConformalField f3 = draw.resolve(basis, prior, 11, CacheTier::fast);
  ConformalField f4 = draw.resolve(basis, prior, 11, CacheTier::fast);
  CHECK(f3.hash_hex() == f4.hash_hex());
}

TEST_CASE("config file loading", "[config]") {
  fs::path dir = fs::temp_directory_path() / "tomo_config_test";
  fs::create_directories(dir);
  CHECK_THROWS_AS(RunConfig::load(dir / "missing.json"), ConfigError);
  write_text_file(dir / "broken.json", "{not json");
  CHECK_THROWS_AS(RunConfig::load(dir / "broken.json"), ConfigError);
  write_text_file(dir / "ok.json", R"({"seed": 9, "modes": 64})");
  RunConfig c = RunConfig::load(dir / "ok.json");
  CHECK(c.seed == 9);
  CHECK(c.modes == 64);
  fs::remove_all(dir);
}

// ============================================================================
// CLI subprocess checks (need the built binary via TOMO_CLI)
// ============================================================================

static int run_cli(const std::string& args) {
  const char* cli = std::getenv("TOMO_CLI");
  REQUIRE(cli != nullptr);
  std::string cmd = std::string(cli) + " " + args + " > /dev/null 2>&1";
  int st = std::system(cmd.c_str());
  return (st >= 0 && WIFEXITED(st)) ? WEXITSTATUS(st) : -1;
}

TEST_CASE("cli exit codes", "[config][cli]") {
  if (!std::getenv("TOMO_CLI")) SKIP("TOMO_CLI not set");
  fs::path dir = fs::temp_directory_path() / "tomo_cli_test";
  fs::create_directories(dir);

  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") != 0);
  CHECK(run_cli("forward --config " + (dir / "absent.json").string()) == 2);

  write_text_file(dir / "broken.json", "{oops");
  CHECK(run_cli("forward --config " + (dir / "broken.json").string()) == 2);

  write_text_file(dir / "nonsimple.json",
                  R"({"seed": 3, "field": {"preset": "deepwell"}})");
  CHECK(run_cli("forward --config " + (dir / "nonsimple.json").string() + " --out " +
                (dir / "ns_out").string()) == 3);

  write_text_file(dir / "flat.json", R"({"seed": 3, "field": {"preset": "flat"}})");
  fs::path out1 = dir / "out1";
  CHECK(run_cli("forward --config " + (dir / "flat.json").string() + " --out " +
                out1.string()) == 0);
  CHECK(fs::exists(out1 / "table.csv"));
  CHECK(fs::exists(out1 / "gamma.f64"));
  CHECK(fs::exists(out1 / "certificate.json"));

  // same config and seed again: byte-identical table payload
  fs::path out2 = dir / "out2";
  CHECK(run_cli("forward --config " + (dir / "flat.json").string() + " --out " +
                out2.string()) == 0);
  CHECK(read_text_file(out1 / "table.csv") == read_text_file(out2 / "table.csv"));
  fs::remove_all(dir);
}
