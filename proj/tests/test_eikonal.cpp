#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tomo/tomo.hpp"

using namespace tomo;

namespace {

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += sqr(a[k] - b[k]);
    den += sqr(b[k]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("options validation", "[eikonal]") {
  EikonalOptions bad;
  bad.h = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = EikonalOptions{};
  bad.order = 3;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = EikonalOptions{};
  bad.margin_cells = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("flat marching reproduces Euclidean distance", "[eikonal]") {
  ConformalField flat = preset_field("flat", 32, CacheTier::fast);
  EikonalOptions opts;
  opts.h = 1.0 / 128;
  double theta = 0.35;
  EikonalResult res = eikonal_solve(flat, theta, opts);
  Vec2 src = from_angle(theta);
  double worst = 0.0;
  for (int i = 0; i < res.m(); i += 5)
    for (int j = 0; j < res.m(); j += 5) {
      Vec2 x{res.node_x(j), res.node_y(i)};
      if (norm2(x) > 1.0) continue;
      worst = std::max(worst, std::fabs(res.at(i, j) - norm(x - src)));
    }
  CHECK(worst < 5e-4);

  std::vector<double> row = eikonal_boundary_row(flat, theta, 64, opts);
  std::vector<double> exact(64);
  for (int j = 0; j < 64; ++j) exact[j] = chord_length(theta, kTwoPi * j / 64);
  CHECK(rel_l2(row, exact) < 2e-4);
}

TEST_CASE("second order tightens the first-order solution", "[eikonal]") {
  ConformalField flat = preset_field("flat", 32, CacheTier::fast);
  EikonalOptions o1, o2;
  o1.h = o2.h = 1.0 / 128;
  o1.order = 1;
  o2.order = 2;
  std::vector<double> exact(64);
  for (int j = 0; j < 64; ++j) exact[j] = chord_length(0.0, kTwoPi * j / 64);
  double e1 = rel_l2(eikonal_boundary_row(flat, 0.0, 64, o1), exact);
  double e2 = rel_l2(eikonal_boundary_row(flat, 0.0, 64, o2), exact);
  CHECK(e2 < e1);
  CHECK(e1 < 5e-3);
}

TEST_CASE("marching accepts nodes in nondecreasing value order", "[eikonal]") {
  ConformalField bump = preset_field("bump", 32, CacheTier::fast);
  EikonalOptions opts;
  opts.h = 1.0 / 96;
  EikonalResult res = eikonal_solve(bump, 1.2, opts);
  REQUIRE(res.accept_trace.size() > 1000);
  for (std::size_t k = 1; k < res.accept_trace.size(); ++k)
    REQUIRE(res.accept_trace[k] >= res.accept_trace[k - 1] - 1e-12);
}

TEST_CASE("bump boundary row crosschecks the shooting solver", "[eikonal]") {
  ConformalField bump = preset_field("bump", 32, CacheTier::high);
  DistanceTable table = build_table(bump, 64, {}, 4);
  EikonalOptions opts;
  opts.h = 1.0 / 128;
  double worst = 0.0;
  for (int i : {0, 17, 40}) {
    std::vector<double> row = eikonal_boundary_row(bump, table.theta(i), 64, opts);
    std::vector<double> bvp(64);
    for (int j = 0; j < 64; ++j) bvp[j] = table.gamma(i, j);
    worst = std::max(worst, rel_l2(row, bvp));
  }
  CHECK(worst < 5e-4);
}

TEST_CASE("grid interpolation is exact at nodes and continuous between", "[eikonal]") {
  ConformalField flat = preset_field("flat", 32, CacheTier::fast);
  EikonalOptions opts;
  opts.h = 1.0 / 64;
  EikonalResult res = eikonal_solve(flat, 0.0, opts);
  int i = res.m() / 3, j = res.m() / 2;
  Vec2 node{res.node_x(j), res.node_y(i)};
  CHECK(res.interp(node) == Catch::Approx(res.at(i, j)).margin(1e-12));
  Vec2 mid = node + Vec2{0.5 * opts.h, 0.5 * opts.h};
  double v = res.interp(mid);
  CHECK(v >= std::min({res.at(i, j), res.at(i + 1, j), res.at(i, j + 1), res.at(i + 1, j + 1)}));
  CHECK(v <= std::max({res.at(i, j), res.at(i + 1, j), res.at(i, j + 1), res.at(i + 1, j + 1)}));
}
