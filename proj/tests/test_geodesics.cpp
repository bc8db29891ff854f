#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tomo/tomo.hpp"

using namespace tomo;

namespace {

ShootOptions trace_opts(double step = 1e-3) {
  ShootOptions o;
  o.step = step;
  o.want_trace = true;
  o.want_jacobi = true;
  return o;
}

}  // namespace

TEST_CASE("flat geodesics are straight chords", "[geodesics]") {
  ConformalField flat = preset_field("flat", 32, CacheTier::fast);
  for (double theta : {0.0, 0.9, 3.7}) {
    for (double psi : {-1.1, -0.4, 0.0, 0.6, 1.3}) {
      Vec2 xi = from_angle(theta);
      Vec2 dir = -xi * std::cos(psi) + rot90(xi) * std::sin(psi);
      GeodesicTrace tr = shoot(flat, xi, dir, trace_opts());
      double exit_theta = std::atan2(tr.exit_point.y, tr.exit_point.x);
      double expected_theta = wrap_angle(theta + kPi - 2.0 * psi);
      CHECK(wrap_angle(exit_theta) == Catch::Approx(expected_theta).margin(1e-9));
      CHECK(tr.exit_time == Catch::Approx(2.0 * std::cos(psi)).margin(1e-9));
      CHECK(norm(tr.exit_point) == Catch::Approx(1.0).margin(1e-12));
      // straight line: exit direction equals start direction
      CHECK(norm(tr.exit_dir - dir) < 1e-9);
    }
  }
}

TEST_CASE("momentum norm equals the conformal factor along the path", "[geodesics]") {
  ConformalField bump = preset_field("bump", 32, CacheTier::fast);
  Vec2 xi = from_angle(0.3);
  GeodesicTrace tr = shoot(bump, xi, unit_speed_velocity(bump, xi, -xi), trace_opts());
  REQUIRE(tr.size() > 100);
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.size(); i += 37) {
    double n = bump.eval(tr.positions[i]).n;
    worst = std::max(worst, std::fabs(norm(tr.momenta[i]) - n));
  }
  CHECK(worst < 1e-8);
  CHECK(norm(tr.exit_momentum) == Catch::Approx(1.0).margin(1e-9));
  // times strictly increasing, endpoints recorded
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == Catch::Approx(tr.exit_time));
  for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr.times[i] > tr.times[i - 1]);
}

TEST_CASE("shoot rejects bad inputs", "[geodesics]") {
  ConformalField flat = preset_field("flat", 32, CacheTier::fast);
  CHECK_THROWS_AS(shoot(flat, {2.0, 0.0}, {-1.0, 0.0}), DomainError);
  // velocity must be g-unit
  CHECK_THROWS_AS(shoot(flat, from_angle(0.0), {-2.0, 0.0}), ValidationError);
  ShootOptions bad;
  bad.step = 0.0;
  CHECK_THROWS_AS(shoot(flat, from_angle(0.0), {-1.0, 0.0}, bad), ValidationError);
}

TEST_CASE("target length stops inside the disk", "[geodesics]") {
  ConformalField flat = preset_field("flat", 32, CacheTier::fast);
  ShootOptions o = trace_opts();
  o.target_length = 0.75;
  GeodesicTrace tr = shoot(flat, from_angle(1.0), -from_angle(1.0), o);
  CHECK_FALSE(tr.exited_boundary);
  CHECK(tr.exit_time == Catch::Approx(0.75).margin(1e-9));
  CHECK(norm(tr.exit_point) == Catch::Approx(0.25).margin(1e-9));
}

TEST_CASE("flat Jacobi framework is affine", "[geodesics]") {
  ConformalField flat = preset_field("flat", 32, CacheTier::fast);
  Vec2 xi = from_angle(0.0);
  GeodesicTrace tr = shoot(flat, xi, -xi, trace_opts());
  // fundamental solutions: b1 = 1, b2 = t
  CHECK(tr.end_b1 == Catch::Approx(1.0).margin(1e-10));
  CHECK(tr.end_b1p == Catch::Approx(0.0).margin(1e-10));
  CHECK(tr.end_b2 == Catch::Approx(tr.exit_time).margin(1e-10));
  CHECK(tr.end_b2p == Catch::Approx(1.0).margin(1e-10));

  Vec2 j0{0.3, -0.4}, jdot0{-0.1, 0.25};
  auto [J, Jdot] = jacobi_transport(tr, j0, jdot0);
  Vec2 expect = j0 + jdot0 * tr.exit_time;
  CHECK(norm(J - expect) < 1e-9);
  CHECK(norm(Jdot - jdot0) < 1e-9);

  Mat2 d = exp_derivative_terminal(tr);
  CHECK(d.a == Catch::Approx(1.0).margin(1e-9));
  CHECK(d.d == Catch::Approx(1.0).margin(1e-9));
  CHECK(d.b == Catch::Approx(0.0).margin(1e-9));
  CHECK(d.c == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("jacobi transport agrees with a finite-difference geodesic variation", "[geodesics]") {
  ConformalField bump = preset_field("bump", 32, CacheTier::high);
  Vec2 xi = from_angle(0.7);
  double psi = 0.35;
  Vec2 d0 = -xi * std::cos(psi) + rot90(xi) * std::sin(psi);
  ShootOptions o = trace_opts();
  o.target_length = 1.2;

  GeodesicTrace base = shoot(bump, xi, unit_speed_velocity(bump, xi, d0), o);
  // vary the shoot angle: J(0) = 0, Jdot(0) = d(v)/d(psi)
  double eps = 1e-5;
  Vec2 d_hi = -xi * std::cos(psi + eps) + rot90(xi) * std::sin(psi + eps);
  Vec2 d_lo = -xi * std::cos(psi - eps) + rot90(xi) * std::sin(psi - eps);
  GeodesicTrace hi = shoot(bump, xi, unit_speed_velocity(bump, xi, d_hi), o);
  GeodesicTrace lo = shoot(bump, xi, unit_speed_velocity(bump, xi, d_lo), o);
  Vec2 fd = (hi.exit_point - lo.exit_point) * (1.0 / (2.0 * eps));

  Vec2 jdot0 = (unit_speed_velocity(bump, xi, d_hi) - unit_speed_velocity(bump, xi, d_lo)) *
               (1.0 / (2.0 * eps));
  auto [J, Jdot] = jacobi_transport(base, {0.0, 0.0}, jdot0);
  CHECK(norm(J - fd) < 5e-6);
}

TEST_CASE("preset certificates", "[geodesics]") {
  CertifyOptions co;
  co.angular_samples = 16;
  co.direction_samples = 32;
  co.step = 2e-3;
  co.trace_resolution = 0.02;

  ConformalField flat = preset_field("flat", 32, CacheTier::fast);
  SimplicityCertificate cf = certify_simplicity(flat, co);
  CHECK(cf.is_simple);
  CHECK(cf.ell == Catch::Approx(1.0).margin(1e-6));
  CHECK(cf.big_l == Catch::Approx(1.0).margin(1e-6));
  CHECK(cf.min_jacobi_det == Catch::Approx(1.0).margin(1e-6));

  ConformalField bump = preset_field("bump", 32, CacheTier::fast);
  SimplicityCertificate cb = certify_simplicity(bump, co);
  CHECK(cb.is_simple);
  CHECK(cb.ell > 0.2);
  CHECK(cb.big_l < 2.0);
  CHECK(cb.ell_safe == Catch::Approx(0.95 * cb.ell));

  ConformalField deep = preset_field("deepwell", 32, CacheTier::fast);
  SimplicityCertificate cd = certify_simplicity(deep, co);
  CHECK_FALSE(cd.is_simple);
  CHECK(cd.min_jacobi_det < 0.0);
}

TEST_CASE("comparison certificate prescreens weak fields", "[geodesics]") {
  DomainSpec dom;
  auto basis = FourierBesselBasis::get(dom, 32);
  std::vector<double> c(32, 0.0);
  c[0] = 0.04;
  ConformalField weak = ConformalField::build(basis, c, CacheTier::fast);
  auto pre = comparison_certificate(weak);
  REQUIRE(pre.has_value());
  CHECK(pre->is_simple);
  CHECK(pre->prescreened);
  // the conservative bracket must contain the sampled values
  CertifyOptions co;
  co.angular_samples = 16;
  co.direction_samples = 32;
  co.step = 2e-3;
  co.trace_resolution = 0.02;
  SimplicityCertificate cb = certify_simplicity(weak, co);
  CHECK(pre->ell <= cb.ell + 1e-9);
  CHECK(pre->big_l >= cb.big_l - 1e-9);

  // strongly curved fields fall outside the analytic comparison window
  ConformalField bump = preset_field("bump", 32, CacheTier::fast);
  CHECK_FALSE(comparison_certificate(bump).has_value());
  ConformalField deep = preset_field("deepwell", 32, CacheTier::fast);
  CHECK_FALSE(comparison_certificate(deep).has_value());
}

TEST_CASE("exp map matches straight lines on the flat disk", "[geodesics]") {
  ConformalField flat = preset_field("flat", 32, CacheTier::fast);
  Vec2 x{0.2, -0.1};
  Vec2 w{0.3, 0.4};
  Vec2 y = exp_map(flat, x, w);
  CHECK(norm(y - (x + w)) < 1e-9);
  CHECK_THROWS_AS(exp_map(flat, x, Vec2{3.0, 0.0}), DomainError);
}

TEST_CASE("exit time angular derivative obeys the certificate bound", "[geodesics]") {
  ConformalField bump = preset_field("bump", 32, CacheTier::fast);
  CertifyOptions co;
  co.angular_samples = 16;
  co.direction_samples = 32;
  co.step = 2e-3;
  co.trace_resolution = 0.02;
  SimplicityCertificate cert = certify_simplicity(bump, co);
  REQUIRE(cert.is_simple);
  int checked = 0;
  for (double theta : {0.0, 1.3, 2.9, 4.4}) {
    for (double psi : {-0.9, -0.3, 0.2, 0.8}) {
      TauDerivativeCheck chk = tau_derivative_check(bump, theta, psi, cert);
      if (chk.skipped) continue;
      ++checked;
      CHECK(chk.numeric_norm <= chk.bound * (1.0 + 1e-6));
    }
  }
  CHECK(checked >= 12);
}
