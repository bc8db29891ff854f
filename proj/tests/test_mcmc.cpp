#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "tomo/tomo.hpp"

using namespace tomo;

TEST_CASE("constant likelihood accepts every in-set proposal", "[mcmc]") {
  FunctorModel model;
  std::vector<double> state{0.0, 0.0};
  double ll = model.log_like(state);
  std::vector<double> sig{1.0, 0.5};
  RngStream rng(1);
  ChainDiagnostics diag;
  for (int i = 0; i < 200; ++i) pcn_step(model, state, ll, 0.4, sig, rng, diag);
  CHECK(diag.proposed == 200);
  CHECK(diag.accepted == 200);
  CHECK(diag.membership_rejects == 0);
}

TEST_CASE("pcn kernel preserves the Gaussian reference measure", "[mcmc]") {
  FunctorModel model;
  std::vector<double> sig{1.0, 0.4};
  std::vector<double> state{0.0, 0.0};
  double ll = 0.0;
  RngStream rng(77);
  ChainDiagnostics diag;
  const int n = 60000;
  double m0 = 0.0, m1 = 0.0, v0 = 0.0, v1 = 0.0;
  for (int i = 0; i < n; ++i) {
    pcn_step(model, state, ll, 0.5, sig, rng, diag);
    m0 += state[0];
    m1 += state[1];
    v0 += state[0] * state[0];
    v1 += state[1] * state[1];
  }
  m0 /= n;
  m1 /= n;
  v0 /= n;
  v1 /= n;
  // autocorrelation at s = 0.5 gives roughly n/6 effective draws
  CHECK(m0 == Catch::Approx(0.0).margin(0.03));
  CHECK(m1 == Catch::Approx(0.0).margin(0.015));
  CHECK(v0 == Catch::Approx(1.0).margin(0.05));
  CHECK(v1 == Catch::Approx(0.16).margin(0.01));
}

TEST_CASE("membership rejection restricts the chain to the set", "[mcmc]") {
  FunctorModel model;
  model.member = [](const std::vector<double>& c) { return c[0] <= 0.5; };
  std::vector<double> sig{1.0};
  std::vector<double> state{0.0};
  double ll = 0.0;
  RngStream rng(3);
  ChainDiagnostics diag;
  for (int i = 0; i < 5000; ++i) {
    pcn_step(model, state, ll, 0.6, sig, rng, diag);
    REQUIRE(state[0] <= 0.5);
  }
  CHECK(diag.membership_rejects > 100);
}

TEST_CASE("chain targets the exact 1d Gaussian posterior", "[mcmc]") {
  // prior N(0,1) times likelihood N(1, 0.5^2): posterior N(0.8, 0.2)
  FunctorModel model;
  model.loglike = [](const std::vector<double>& c) { return -2.0 * sqr(c[0] - 1.0); };
  std::vector<double> sig{1.0};
  PcnOptions opts;
  opts.n_steps = 60000;
  opts.burn_in = 2000;
  opts.thinning = 1;
  opts.step_size = 0.5;
  RngStream rng(2024);
  ChainResult res = run_chain(model, sig, {0.0}, opts, rng);
  double mean = 0.0, var = 0.0;
  for (const auto& s : res.samples) mean += s[0];
  mean /= static_cast<double>(res.samples.size());
  for (const auto& s : res.samples) var += sqr(s[0] - mean);
  var /= static_cast<double>(res.samples.size());
  CHECK(mean == Catch::Approx(0.8).margin(0.02));
  CHECK(var == Catch::Approx(0.2).margin(0.02));
  CHECK(res.diag.accept_rate > 0.05);
  CHECK_FALSE(res.diag.accept_warning);
}

TEST_CASE("ess estimator separates iid from correlated series", "[mcmc]") {
  RngStream rng(8);
  std::vector<double> iid(4096);
  for (double& v : iid) v = rng.normal();
  double e_iid = ess_batch_means(iid);
  CHECK(e_iid > 1500.0);

  std::vector<double> ar(4096);
  double x = 0.0;
  for (double& v : ar) {
    x = 0.95 * x + rng.normal();
    v = x;
  }
  double e_ar = ess_batch_means(ar);
  CHECK(e_ar < e_iid / 4.0);

  std::vector<double> tiny{1.0, 2.0};
  CHECK(ess_batch_means(tiny) == 2.0);
}

TEST_CASE("split rhat flags disagreeing chains", "[mcmc]") {
  RngStream rng(9);
  auto make_chain = [&](double offset) {
    std::vector<std::vector<double>> ch;
    for (int i = 0; i < 500; ++i) ch.push_back({offset + rng.normal()});
    return ch;
  };
  std::vector<std::vector<std::vector<double>>> same{make_chain(0.0), make_chain(0.0)};
  CHECK(split_rhat(same) < 1.1);
  std::vector<std::vector<std::vector<double>>> apart{make_chain(0.0), make_chain(5.0)};
  CHECK(split_rhat(apart) > 2.0);
}

TEST_CASE("run_chain bookkeeping", "[mcmc]") {
  FunctorModel model;
  std::vector<double> sig{1.0};
  PcnOptions opts;
  opts.n_steps = 400;
  opts.burn_in = 100;
  opts.thinning = 7;
  opts.step_size = 0.3;
  opts.adapt_interval = 25;
  RngStream rng(4);
  ChainResult res = run_chain(model, sig, {0.0}, opts, rng);
  // constant likelihood: every proposal accepted, adaptation walks the step up
  CHECK(res.diag.accept_rate == 1.0);
  CHECK(res.diag.accept_warning);
  CHECK(res.diag.final_step > opts.step_size);
  CHECK(res.diag.step_schedule.size() == 1 + 100 / 25);
  CHECK(res.samples.size() == (400 - 100 + 6) / 7);
  CHECK(res.diag.ess.size() == 1);

  FunctorModel closed;
  closed.member = [](const std::vector<double>&) { return false; };
  RngStream rng2(5);
  CHECK_THROWS_AS(run_chain(closed, sig, {0.0}, opts, rng2), ValidationError);
}

TEST_CASE("chain result export", "[mcmc]") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "tomo_chain_test";
  fs::create_directories(dir);
  ChainResult res;
  res.samples = {{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}};
  res.diag.accept_rate = 0.5;
  res.save(dir, "c");
  std::vector<double> flat = read_f64_matrix(dir / "c.f64");
  CHECK(flat == std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  nlohmann::json meta = nlohmann::json::parse(read_text_file(dir / "c.json"));
  CHECK(meta.at("n_samples").get<int>() == 3);
  CHECK(meta.at("n_modes").get<int>() == 2);
  std::string trace = read_text_file(dir / "c_trace.csv");
  CHECK(trace.rfind("sample,c0,c1", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("posterior mean helpers", "[mcmc]") {
  std::vector<std::vector<double>> samples{{1.0, 0.0}, {3.0, 2.0}};
  std::vector<double> mean = mean_coefficients(samples);
  CHECK(mean == std::vector<double>{2.0, 1.0});
  CHECK_THROWS_AS(mean_coefficients({}), ValidationError);

  ConformalField bump = preset_field("bump", 32, CacheTier::fast);
  CHECK(l2_error(bump, bump, 128) == 0.0);
  ConformalField flat = preset_field("flat", 32, CacheTier::fast);
  CHECK(l2_error(bump, flat, 128) > 0.0);
}

TEST_CASE("posterior model runs a short restricted chain", "[mcmc]") {
  DomainSpec dom;
  auto basis = FourierBesselBasis::get(dom, 32);
  PriorSpec prior;
  ConformalField truth = preset_field("twobump", 32, CacheTier::fast);
  DistanceTable table = build_table(truth, 64, {}, 4);
  RngStream drng = RngStream::derive(21, "data", 0);
  Dataset data = sample_dataset(truth, &table, 60, drng, ZMode::fast);

  PosteriorModel model(basis, prior, data);
  std::vector<double> sig = prior.mode_stddevs();
  PcnOptions opts;
  opts.n_steps = 16;
  opts.burn_in = 8;
  opts.thinning = 2;
  opts.step_size = 0.3;
  RngStream rng = RngStream::derive(21, "chain", 0);
  ChainResult res = run_chain(model, sig, std::vector<double>(32, 0.0), opts, rng);
  CHECK(res.samples.size() == 4);
  for (const auto& s : res.samples) CHECK(s.size() == 32);
  CHECK(res.diag.proposed == 16);

  // the same seeds give bit-identical samples
  PosteriorModel model2(basis, prior, data);
  RngStream rng2 = RngStream::derive(21, "chain", 0);
  ChainResult res2 = run_chain(model2, sig, std::vector<double>(32, 0.0), opts, rng2);
  CHECK(res.samples == res2.samples);
}
