#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "tomo/tomo.hpp"

using namespace tomo;

namespace {

const ConformalField& bump_field() {
  static ConformalField f = preset_field("bump", 32, CacheTier::high);
  return f;
}

const DistanceTable& bump_table() {
  static DistanceTable t = build_table(bump_field(), 64, {}, 4);
  return t;
}

const ConformalField& flat_field() {
  static ConformalField f = preset_field("flat", 32, CacheTier::fast);
  return f;
}

const DistanceTable& flat_table() {
  static DistanceTable t = build_table(flat_field(), 64, {}, 4);
  return t;
}

}  // namespace

TEST_CASE("datasets are reproducible from the stream", "[statmodel]") {
  RngStream r1 = RngStream::derive(11, "data", 0);
  RngStream r2 = RngStream::derive(11, "data", 0);
  Dataset d1 = sample_dataset(bump_field(), &bump_table(), 100, r1, ZMode::fast);
  Dataset d2 = sample_dataset(bump_field(), &bump_table(), 100, r2, ZMode::fast);
  REQUIRE(d1.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(d1.records[i].theta_x == d2.records[i].theta_x);
    CHECK(d1.records[i].z == d2.records[i].z);
  }
  CHECK(d1.truth_hash == bump_field().hash());
  CHECK(d1.resamples == 0);
}

TEST_CASE("fast and exact observation modes agree to interpolation accuracy", "[statmodel]") {
  RngStream ra = RngStream::derive(12, "data", 0);
  RngStream rb = RngStream::derive(12, "data", 0);
  Dataset fast = sample_dataset(bump_field(), &bump_table(), 40, ra, ZMode::fast, {}, 0.0);
  Dataset exact = sample_dataset(bump_field(), nullptr, 40, rb, ZMode::exact, {}, 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < 40; ++i) {
    REQUIRE(fast.records[i].theta_x == exact.records[i].theta_x);
    worst = std::max(worst, std::fabs(fast.records[i].z - exact.records[i].z));
  }
  CHECK(worst < 5e-4);
}

TEST_CASE("dataset export and metadata", "[statmodel]") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "tomo_dataset_test";
  fs::create_directories(dir);
  RngStream r = RngStream::derive(13, "data", 0);
  Dataset d = sample_dataset(bump_field(), &bump_table(), 10, r, ZMode::fast);
  d.seed = 13;
  d.save_csv(dir / "d.csv");
  std::string csv = read_text_file(dir / "d.csv");
  CHECK(csv.rfind("theta_x,theta_y,z", 0) == 0);
  CHECK(d.metadata().at("n").get<std::size_t>() == 10);
  CHECK(d.metadata().at("seed").get<std::uint64_t>() == 13);
  fs::remove_all(dir);
}

TEST_CASE("log likelihood matches the Gaussian formula", "[statmodel]") {
  Dataset d;
  d.records = {{0.1, 2.0, 0.7}, {3.0, 5.5, -0.2}};
  auto zfn = [](double, double) { return 0.25; };
  double expect = -0.5 * (sqr(0.7 - 0.25) + sqr(-0.2 - 0.25)) - 0.5 * std::log(kTwoPi) * 2.0;
  CHECK(log_likelihood(zfn, d) == Catch::Approx(expect).epsilon(1e-14));
}

TEST_CASE("information distances vanish iff the tables coincide", "[statmodel]") {
  CHECK(kl_divergence(bump_table(), bump_table()) == 0.0);
  CHECK(hellinger_affinity(bump_table(), bump_table()) == 1.0);
  CHECK(hellinger(bump_table(), bump_table()) == 0.0);
  CHECK(variance_proxy(bump_table(), bump_table()) == 0.0);
  CHECK(kl_divergence(flat_table(), bump_table()) > 0.0);
  CHECK(hellinger(flat_table(), bump_table()) > 0.0);
}

TEST_CASE("closed forms match Monte-Carlo estimates", "[statmodel]") {
  double kl = kl_divergence(flat_table(), bump_table());
  double h = hellinger(flat_table(), bump_table());
  double v = variance_proxy(flat_table(), bump_table());

  FastZ z1(flat_table()), z2(bump_table());
  RngStream rng(424242);
  McInfo mc = mc_info_distances(z1, z2, 200000, rng);
  CHECK(mc.kl == Catch::Approx(kl).margin(1e-2));
  CHECK(mc.hellinger == Catch::Approx(h).margin(1e-2));
  CHECK(mc.variance == Catch::Approx(v).margin(2e-2));
}

TEST_CASE("hellinger sandwich holds with the class constant", "[statmodel]") {
  HellingerSandwich s =
      hellinger_sandwich(flat_table(), bump_table(), flat_field(), bump_field());
  CHECK(s.ok);
  CHECK(s.kappa > 0.0);
  CHECK(s.kappa < 0.25);
  CHECK(s.lower <= s.h2);
  CHECK(s.h2 <= s.upper);
  CHECK(s.delta_bound > 0.0);
}

TEST_CASE("prior spec validation and serialization", "[statmodel]") {
  PriorSpec p;
  p.validate();
  std::vector<double> sig = p.mode_stddevs();
  REQUIRE(sig.size() == 32);
  CHECK(sig[0] == Catch::Approx(p.scale));
  CHECK(sig[3] == Catch::Approx(p.scale * std::pow(4.0, -(p.alpha / 2 + 0.5))));
  for (std::size_t j = 1; j < sig.size(); ++j) CHECK(sig[j] < sig[j - 1]);

  PriorSpec round = PriorSpec::from_json(p.to_json());
  CHECK(round.alpha == p.alpha);
  CHECK(round.trunc_M == p.trunc_M);
  CHECK(round.certify.direction_samples == p.certify.direction_samples);

  PriorSpec bad = p;
  bad.alpha = 3.5;  // needs alpha > beta + 1 = 4
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.beta = 2.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.trunc_ell = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("membership separates the preset fields", "[statmodel]") {
  PriorSpec p;
  MembershipResult ok = check_membership(bump_field(), p);
  CHECK(ok.ok);
  CHECK(ok.c3 < p.trunc_M);
  CHECK(ok.cert.is_simple);

  // the C3 ball is checked first (cheap), so the strong deepwell never
  // reaches the certify stage
  MembershipResult deep = check_membership(preset_field("deepwell", 32, CacheTier::fast), p);
  CHECK_FALSE(deep.ok);
  CHECK(deep.reason == "c3_bound");

  // a moderate slow bump passes the C3 ball but focuses to a conjugate point
  DomainSpec dom;
  auto basis = FourierBesselBasis::get(dom, 32);
  std::vector<double> cc(32, 0.0);
  cc[0] = 0.3;
  MembershipResult conj =
      check_membership(ConformalField::build(basis, cc, CacheTier::fast), p);
  CHECK_FALSE(conj.ok);
  CHECK(conj.reason == "conjugate_point");

  PriorSpec tight = p;
  tight.trunc_M = 1e-6;
  MembershipResult big = check_membership(bump_field(), tight);
  CHECK_FALSE(big.ok);
  CHECK(big.reason == "c3_bound");

  PriorSpec high_ell = p;
  high_ell.trunc_ell = 0.99;
  MembershipResult lowell = check_membership(bump_field(), high_ell);
  CHECK_FALSE(lowell.ok);
  CHECK(lowell.reason == "ell_bound");
}

TEST_CASE("prior draws are deterministic and land in the truncation set", "[statmodel]") {
  DomainSpec dom;
  auto basis = FourierBesselBasis::get(dom, 32);
  PriorSpec p;
  RngStream r1 = RngStream::derive(5, "prior", 3);
  RngStream r2 = RngStream::derive(5, "prior", 3);
  PriorDrawStats stats;
  ConformalField f1 = sample_prior(basis, p, r1, CacheTier::fast, &stats);
  ConformalField f2 = sample_prior(basis, p, r2, CacheTier::fast);
  CHECK(f1.hash() == f2.hash());
  CHECK(stats.attempts >= 1);
  CHECK(check_membership(f1, p).ok);
}

TEST_CASE("infeasible truncation set raises after max_rejections", "[statmodel]") {
  DomainSpec dom;
  auto basis = FourierBesselBasis::get(dom, 32);
  PriorSpec p;
  p.trunc_M = 1e-9;  // nothing passes
  p.max_rejections = 3;
  RngStream r(17);
  CHECK_THROWS_AS(sample_prior(basis, p, r), ValidationError);
}
