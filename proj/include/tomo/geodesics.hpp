#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "tomo/common.hpp"
#include "tomo/field.hpp"

namespace tomo {

// Unit-speed geodesics of g = n^2 (dx^2 + dy^2) via the Hamiltonian flow of
// H(x, p) = |p|^2 / (2 n(x)^2) on the level H = 1/2 (so |p| = n along the
// ray and the flow parameter is g-arclength). Alongside the ray we propagate
// the two fundamental solutions of the normal Jacobi equation
//   b'' + K b = 0,  K = -exp(-2c) * laplacian(c),
// which give exponential-map derivatives and conjugate-point tests. Where the
// ray lies in the collar (r >= inner radius) the metric is Euclidean, so the
// segment is advanced analytically: straight line, affine Jacobi data.

struct ShootOptions {
  double step = 1e-3;
  bool want_trace = true;
  bool want_jacobi = true;
  int trace_stride = 1;            // keep every k-th integration step
  double max_length_factor = 10.0; // times Lambda * diameter
  double target_length = -1.0;     // > 0: stop at this arclength instead of the boundary
  double velocity_tol = 1e-6;      // accepted |v|_g - 1 mismatch

  void validate() const {
    if (!(step > 0.0) || !(step <= 0.1))
      throw ValidationError("shoot step must lie in (0, 0.1]");
    if (trace_stride < 1) throw ValidationError("trace_stride must be >= 1");
  }
};

struct GeodesicTrace {
  // Sampled states (subject to trace_stride; always includes start and end).
  std::vector<double> times;
  std::vector<Vec2> positions;
  std::vector<Vec2> momenta;
  std::vector<double> b1, b1p, b2, b2p;
  bool has_jacobi = false;

  Vec2 start_point, start_velocity, start_momentum;
  double exit_time = 0.0;          // total arclength at the terminal state
  Vec2 exit_point, exit_momentum;
  Vec2 exit_dir;                   // Euclidean-unit direction at the terminal state
  bool exited_boundary = true;     // false when stopped at target_length
  double end_b1 = 1.0, end_b1p = 0.0, end_b2 = 0.0, end_b2p = 1.0;

  std::size_t size() const { return times.size(); }
};

namespace detail {

struct ShootState {
  Vec2 x, p;
  double b1 = 1.0, b1p = 0.0, b2 = 0.0, b2p = 1.0;
};

struct ShootDeriv {
  Vec2 dx, dp;
  double db1, db1p, db2, db2p;
};

inline ShootDeriv shoot_rhs(const ConformalField& field, const ShootState& s, bool jacobi) {
  ShootDeriv d;
  double c, cx, cy;
  field.sample_c(s.x.x, s.x.y, c, cx, cy);
  double e = std::exp(-2.0 * c);
  double p2 = norm2(s.p);
  d.dx = s.p * e;
  d.dp = Vec2{cx, cy} * (p2 * e);
  if (jacobi) {
    // b'' = -K b = exp(-2c) * lap(c) * b.
    double minus_k = e * field.laplacian_c(s.x);
    d.db1 = s.b1p;
    d.db1p = minus_k * s.b1;
    d.db2 = s.b2p;
    d.db2p = minus_k * s.b2;
  } else {
    d.db1 = d.db1p = d.db2 = d.db2p = 0.0;
  }
  return d;
}

inline ShootState shoot_advance(const ShootState& s, const ShootDeriv& d, double h) {
  ShootState r;
  r.x = s.x + d.dx * h;
  r.p = s.p + d.dp * h;
  r.b1 = s.b1 + d.db1 * h;
  r.b1p = s.b1p + d.db1p * h;
  r.b2 = s.b2 + d.db2 * h;
  r.b2p = s.b2p + d.db2p * h;
  return r;
}

inline ShootState rk4_step(const ConformalField& field, const ShootState& s, double h,
                           bool jacobi) {
  ShootDeriv k1 = shoot_rhs(field, s, jacobi);
  ShootDeriv k2 = shoot_rhs(field, shoot_advance(s, k1, 0.5 * h), jacobi);
  ShootDeriv k3 = shoot_rhs(field, shoot_advance(s, k2, 0.5 * h), jacobi);
  ShootDeriv k4 = shoot_rhs(field, shoot_advance(s, k3, h), jacobi);
  ShootState r;
  double w = h / 6.0;
  r.x = s.x + (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx) * w;
  r.p = s.p + (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp) * w;
  r.b1 = s.b1 + (k1.db1 + 2.0 * k2.db1 + 2.0 * k3.db1 + k4.db1) * w;
  r.b1p = s.b1p + (k1.db1p + 2.0 * k2.db1p + 2.0 * k3.db1p + k4.db1p) * w;
  r.b2 = s.b2 + (k1.db2 + 2.0 * k2.db2 + 2.0 * k3.db2 + k4.db2) * w;
  r.b2p = s.b2p + (k1.db2p + 2.0 * k2.db2p + 2.0 * k3.db2p + k4.db2p) * w;
  return r;
}

// First entry hit: smallest s > eps with |x + s u|^2 = radius^2, for rays
// starting outside the circle. Returns negative if the ray misses.
inline double ray_circle_entry(const Vec2& x, const Vec2& u, double radius, double eps = 1e-12) {
  double b = dot(x, u);
  double cterm = norm2(x) - radius * radius;
  double disc = b * b - cterm;
  if (disc < 0.0) return -1.0;
  double root = std::sqrt(disc);
  double s1 = -b - root;
  double s2 = -b + root;
  if (s1 > eps) return s1;
  if (s2 > eps) return s2;
  return -1.0;
}

// Exit hit for rays starting inside or on the circle: always the far root,
// clamped at zero (tangent or outward start exits immediately).
inline double ray_circle_exit(const Vec2& x, const Vec2& u, double radius) {
  double b = dot(x, u);
  double cterm = norm2(x) - radius * radius;
  double disc = b * b - cterm;
  if (disc < 0.0) disc = 0.0;
  double s = -b + std::sqrt(disc);
  return s > 0.0 ? s : 0.0;
}

}  // namespace detail

inline double max_geodesic_length(const ConformalField& field, double factor) {
  return factor * field.big_lambda() * 2.0 * field.domain().outer_radius;
}

// Convenience: the g-unit velocity at x pointing along a Euclidean direction.
inline Vec2 unit_speed_velocity(const ConformalField& field, Vec2 x, Vec2 direction) {
  Vec2 u = normalized(direction);
  return u / field.eval(x).n;
}

inline GeodesicTrace shoot(const ConformalField& field, Vec2 x0, Vec2 v0,
                           const ShootOptions& opts = {}) {
  opts.validate();
  double R = field.domain().outer_radius;
  if (norm2(x0) > R * R * (1.0 + 1e-10))
    throw DomainError("shoot start lies outside the closed disk");
  double n0 = field.eval(x0).n;
  double gnorm = norm(v0) * n0;
  if (std::fabs(gnorm - 1.0) > opts.velocity_tol)
    throw ValidationError("shoot velocity is not g-unit (|v|_g = " + fmt_g17(gnorm) + ")");

  double r0sq = field.inner_radius_sq();
  double max_len = max_geodesic_length(field, opts.max_length_factor);
  bool jacobi = opts.want_jacobi;

  GeodesicTrace tr;
  tr.has_jacobi = jacobi;
  tr.start_point = x0;
  tr.start_velocity = v0;
  tr.start_momentum = v0 * (n0 * n0);

  detail::ShootState s;
  s.x = x0;
  s.p = tr.start_momentum;
  double tau = 0.0;
  long step_index = 0;

  auto record = [&](double t, const detail::ShootState& st, bool force) {
    if (!opts.want_trace) return;
    if (!force && (step_index % opts.trace_stride) != 0) return;
    tr.times.push_back(t);
    tr.positions.push_back(st.x);
    tr.momenta.push_back(st.p);
    if (jacobi) {
      tr.b1.push_back(st.b1);
      tr.b1p.push_back(st.b1p);
      tr.b2.push_back(st.b2);
      tr.b2p.push_back(st.b2p);
    }
  };

  auto finish = [&](const detail::ShootState& st, bool on_boundary) {
    tr.exit_time = tau;
    tr.exit_point = st.x;
    tr.exit_momentum = st.p;
    tr.exit_dir = normalized(st.p);
    tr.exited_boundary = on_boundary;
    tr.end_b1 = st.b1;
    tr.end_b1p = st.b1p;
    tr.end_b2 = st.b2;
    tr.end_b2p = st.b2p;
    if (opts.want_trace && (tr.times.empty() || tr.times.back() != tau)) record(tau, st, true);
  };

  record(0.0, s, true);

  auto advance_linear = [&](detail::ShootState& st, double dist, const Vec2& u) {
    // Analytic straight segment in the collar; Jacobi data is affine.
    double remaining = dist;
    while (opts.want_trace && remaining > opts.step) {
      double hseg = opts.step;
      st.x += u * hseg;
      st.b1 += st.b1p * hseg;
      st.b2 += st.b2p * hseg;
      tau += hseg;
      ++step_index;
      remaining -= hseg;
      record(tau, st, false);
    }
    st.x += u * remaining;
    st.b1 += st.b1p * remaining;
    st.b2 += st.b2p * remaining;
    tau += remaining;
    ++step_index;
  };

  bool in_core = norm2(s.x) < r0sq;
  for (;;) {
    if (tau > max_len)
      throw NonSimpleError("geodesic exceeded the length budget (non-simple suspected)");

    if (!in_core) {
      // Collar: exact straight-line continuation.
      Vec2 u = normalized(s.p);
      s.p = u;  // |p| = n = 1 here; absorbs integrator drift of ~1e-12
      double s_outer = detail::ray_circle_exit(s.x, u, R);
      double s_inner = detail::ray_circle_entry(s.x, u, std::sqrt(r0sq));
      bool enters_core = s_inner > 0.0 && s_inner < s_outer && dot(s.x + u * s_inner, u) < 0.0;
      double seg = enters_core ? s_inner : s_outer;
      if (opts.target_length > 0.0 && tau + seg >= opts.target_length) {
        advance_linear(s, opts.target_length - tau, u);
        finish(s, false);
        return tr;
      }
      advance_linear(s, seg, u);
      record(tau, s, true);
      if (!enters_core) {
        finish(s, true);
        return tr;
      }
      in_core = true;  // sitting on the core circle pointing inward
    }

    // Interior: fixed-step RK4 until the ray leaves the core disk. The first
    // step always runs (entry points sit exactly on the circle).
    do {
      if (tau > max_len)
        throw NonSimpleError("geodesic exceeded the length budget (non-simple suspected)");
      double h = opts.step;
      if (opts.target_length > 0.0 && tau + h >= opts.target_length) {
        double hlast = opts.target_length - tau;
        if (hlast > 1e-15) s = detail::rk4_step(field, s, hlast, jacobi);
        tau = opts.target_length;
        finish(s, false);
        return tr;
      }
      s = detail::rk4_step(field, s, h, jacobi);
      tau += h;
      ++step_index;
      record(tau, s, false);
    } while (norm2(s.x) < r0sq);
    in_core = false;
  }
}

// Terminal Jacobi field (J, DJ/dt) for arbitrary initial data, assembled from
// the stored fundamental pair. Components are taken against the parallel
// frame (gamma-dot, E = rot90(gamma-dot)); with H = 1/2 the pairings reduce
// to plain momentum inner products: a = <J, p>, b = <J, rot90(p)>.
inline std::pair<Vec2, Vec2> jacobi_transport(const GeodesicTrace& tr, Vec2 j0, Vec2 jdot0) {
  if (!tr.has_jacobi) throw ValidationError("trace was shot without Jacobi data");
  Vec2 p0 = tr.start_momentum;
  Vec2 e0 = rot90(p0);
  double a0 = dot(j0, p0);
  double b0 = dot(j0, e0);
  double a0p = dot(jdot0, p0);
  double b0p = dot(jdot0, e0);
  double T = tr.exit_time;
  double aT = a0 + a0p * T;
  double bT = tr.end_b1 * b0 + tr.end_b2 * b0p;
  double bTp = tr.end_b1p * b0 + tr.end_b2p * b0p;
  Vec2 pT = tr.exit_momentum;
  Vec2 eT = rot90(pT);
  double inv = 1.0 / norm2(pT);
  Vec2 J = (pT * aT + eT * bT) * inv;
  Vec2 Jdot = (pT * a0p + eT * bTp) * inv;
  return {J, Jdot};
}

// Same at a stored sample index.
inline std::pair<Vec2, Vec2> jacobi_at(const GeodesicTrace& tr, std::size_t idx, Vec2 j0,
                                       Vec2 jdot0) {
  if (!tr.has_jacobi) throw ValidationError("trace was shot without Jacobi data");
  Vec2 p0 = tr.start_momentum;
  Vec2 e0 = rot90(p0);
  double a0 = dot(j0, p0);
  double b0 = dot(j0, e0);
  double a0p = dot(jdot0, p0);
  double b0p = dot(jdot0, e0);
  double t = tr.times[idx];
  double at = a0 + a0p * t;
  double bt = tr.b1[idx] * b0 + tr.b2[idx] * b0p;
  double btp = tr.b1p[idx] * b0 + tr.b2p[idx] * b0p;
  Vec2 pt = tr.momenta[idx];
  Vec2 et = rot90(pt);
  double inv = 1.0 / norm2(pt);
  return {(pt * at + et * bt) * inv, (pt * a0p + et * btp) * inv};
}

// Derivative of exp_x at w = t*v applied to the identity basis, as a 2x2
// matrix in Euclidean coordinates: column i is J_{e_i}(t) / t.
inline Mat2 exp_derivative_at(const GeodesicTrace& tr, double t, Vec2 pt, double b2t) {
  Vec2 p0 = tr.start_momentum;
  Vec2 e0 = rot90(p0);
  Vec2 et = rot90(pt);
  double inv = 1.0 / norm2(pt);
  Mat2 m;
  Vec2 cols[2];
  Vec2 basis[2] = {{1.0, 0.0}, {0.0, 1.0}};
  for (int i = 0; i < 2; ++i) {
    double ap = dot(basis[i], p0);
    double bp = dot(basis[i], e0);
    cols[i] = (pt * ap + et * (bp * b2t / t)) * inv;
  }
  m.a = cols[0].x;
  m.b = cols[1].x;
  m.c = cols[0].y;
  m.d = cols[1].y;
  return m;
}

inline Mat2 exp_derivative_terminal(const GeodesicTrace& tr) {
  return exp_derivative_at(tr, tr.exit_time, tr.exit_momentum, tr.end_b2);
}

// exp_x(w): follow the g-unit ray along w for arclength |w|_g.
inline Vec2 exp_map(const ConformalField& field, Vec2 x, Vec2 w, ShootOptions opts = {}) {
  double n = field.eval(x).n;
  double len = norm(w) * n;  // |w|_g
  if (len == 0.0) return x;
  Vec2 v = w / (norm(w) * n);
  opts.target_length = len;
  opts.want_trace = false;
  opts.want_jacobi = false;
  GeodesicTrace tr = shoot(field, x, v, opts);
  if (tr.exited_boundary)
    throw DomainError("exp_map target lies beyond the boundary exit");
  return tr.exit_point;
}

// ============================================================================
// Simplicity certification
// ============================================================================

struct SimplicityCertificate {
  bool is_simple = false;
  double ell = 0.0;       // sampled inf of the exponential-map singular values
  double big_l = 0.0;     // sampled sup
  double ell_safe = 0.0;  // 5% safety-deflated / inflated copies
  double big_l_safe = 0.0;
  double min_jacobi_det = 0.0;
  double convexity_margin = 0.0;
  bool prescreened = false;  // true when issued by the comparison bound
  int sample_count = 0;

  nlohmann::json to_json() const {
    return {{"is_simple", is_simple},
            {"ell", ell},
            {"big_l", big_l},
            {"ell_safe", ell_safe},
            {"big_l_safe", big_l_safe},
            {"min_jacobi_det", min_jacobi_det},
            {"convexity_margin", convexity_margin},
            {"prescreened", prescreened},
            {"sample_count", sample_count}};
  }
};

struct CertifyOptions {
  int angular_samples = 32;
  int direction_samples = 64;
  double step = 1e-3;
  double trace_resolution = 0.01;  // arclength between inspected samples
  std::vector<double> interior_radii = {0.35, 0.6};

  void validate() const {
    if (angular_samples < 16 || direction_samples < 16)
      throw ValidationError("certify needs at least 16 angular and direction samples");
  }
};

// Rigorous Sturm-comparison certificate: in 2D the singular values of the
// exponential-map derivative are exactly {n(x)/n(y), n(x)/n(y) * b(t)/t}, so
// curvature bounds pin them inside [lambda/Lambda * sinc, Lambda/lambda *
// sinh-ratio] whenever sqrt(max K) * (2 Lambda) stays below 0.9 * pi. Only a
// sufficient condition: failure means "fall back to the fan", not
// "non-simple".
inline std::optional<SimplicityCertificate> comparison_certificate(const ConformalField& field) {
  double Lam = field.big_lambda();
  double lam = field.lambda();
  double tmax = 2.0 * field.domain().outer_radius * Lam;
  double kplus = std::max(0.0, field.curvature_sup());
  double kminus = std::min(0.0, field.curvature_inf());
  double z = std::sqrt(kplus) * tmax;
  if (z >= 0.9 * kPi) return std::nullopt;
  double lower_ratio = (z > 1e-12) ? std::sin(z) / z : 1.0;
  double zneg = std::sqrt(-kminus) * tmax;
  double upper_ratio = (zneg > 1e-12) ? std::sinh(zneg) / zneg : 1.0;
  SimplicityCertificate cert;
  cert.is_simple = true;
  cert.prescreened = true;
  cert.ell = (lam / Lam) * std::min(1.0, lower_ratio);
  cert.big_l = (Lam / lam) * std::max(1.0, upper_ratio);
  cert.ell_safe = 0.95 * cert.ell;
  cert.big_l_safe = 1.05 * cert.big_l;
  cert.min_jacobi_det = sqr(lam / Lam) * lower_ratio;
  cert.convexity_margin = 1.0;
  cert.sample_count = 0;
  return cert;
}

inline SimplicityCertificate certify_simplicity(const ConformalField& field,
                                                const CertifyOptions& opts = {}) {
  opts.validate();
  SimplicityCertificate cert;

  // Boundary strictly convex: the collar metric is exactly Euclidean, so the
  // unit circle has normal curvature 1. Verify the collar really is flat.
  double collar_dev = 0.0;
  for (int i = 0; i < 64; ++i) {
    double t = kTwoPi * i / 64.0;
    double r = field.domain().inner_radius + (0.1 + 0.8 * ((i * 7) % 11) / 11.0) *
                                                 field.domain().boundary_gap();
    FieldEval e = field.eval({r * std::cos(t), r * std::sin(t)});
    collar_dev = std::max({collar_dev, std::fabs(e.n - 1.0), norm(e.grad_n)});
  }
  cert.convexity_margin = collar_dev == 0.0 ? 1.0 : (collar_dev < 1e-12 ? 1.0 : 0.0);

  ShootOptions shoot_opts;
  shoot_opts.step = opts.step;
  shoot_opts.want_trace = true;
  shoot_opts.want_jacobi = true;
  shoot_opts.trace_stride = std::max(1, static_cast<int>(opts.trace_resolution / opts.step));

  double ell = std::numeric_limits<double>::infinity();
  double big_l = 0.0;
  double min_det = std::numeric_limits<double>::infinity();
  int samples = 0;
  bool trapped = false;

  auto inspect = [&](Vec2 origin, Vec2 direction) {
    Vec2 v = unit_speed_velocity(field, origin, direction);
    GeodesicTrace tr;
    try {
      tr = shoot(field, origin, v, shoot_opts);
    } catch (const NonSimpleError&) {
      trapped = true;
      return;
    }
    double np0 = norm(tr.start_momentum);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      double t = tr.times[i];
      if (t < 0.5 * opts.step) continue;
      double ratio = np0 / norm(tr.momenta[i]);
      double s1 = ratio;
      double s2 = ratio * tr.b2[i] / t;
      double det = ratio * ratio * (tr.b2[i] / t);
      ell = std::min({ell, std::fabs(s1), std::fabs(s2)});
      big_l = std::max({big_l, std::fabs(s1), std::fabs(s2)});
      min_det = std::min(min_det, det);
      ++samples;
    }
  };

  // Boundary fans: inward directions, avoiding exact tangency.
  double margin = kPi / 64.0;
  for (int i = 0; i < opts.angular_samples && !trapped; ++i) {
    double theta = kTwoPi * i / opts.angular_samples;
    Vec2 xi = from_angle(theta);
    Vec2 nu_in = -xi;
    Vec2 tangent = rot90(xi);
    for (int j = 0; j < opts.direction_samples && !trapped; ++j) {
      double psi = -kPi / 2 + margin + (kPi - 2 * margin) * j / (opts.direction_samples - 1.0);
      inspect(xi, nu_in * std::cos(psi) + tangent * std::sin(psi));
    }
  }
  // Interior fans: full circle of directions.
  for (double r : opts.interior_radii) {
    for (int i = 0; i < opts.angular_samples && !trapped; ++i) {
      double theta = kTwoPi * (i + 0.37) / opts.angular_samples;
      Vec2 origin = {r * std::cos(theta), r * std::sin(theta)};
      for (int j = 0; j < opts.direction_samples && !trapped; ++j) {
        double phi = kTwoPi * j / opts.direction_samples;
        inspect(origin, from_angle(phi));
      }
    }
  }

  cert.sample_count = samples;
  if (trapped || samples == 0) {
    cert.is_simple = false;
    cert.ell = 0.0;
    cert.big_l = big_l;
    cert.min_jacobi_det = trapped ? -1.0 : 0.0;
  } else {
    cert.ell = ell;
    cert.big_l = big_l;
    cert.min_jacobi_det = min_det;
    cert.is_simple = (min_det > 0.0) && (cert.convexity_margin > 0.0);
  }
  cert.ell_safe = 0.95 * cert.ell;
  cert.big_l_safe = 1.05 * cert.big_l;
  return cert;
}

// ============================================================================
// Exit-time angular derivative check (boundary-normal bound)
// ============================================================================

struct TauDerivativeCheck {
  double numeric_norm = 0.0;
  double bound = 0.0;
  bool skipped = false;  // grazing exit: denominator below threshold
};

// v is parametrized by the angle psi from the inward normal at the boundary
// point xi(theta_xi); the check compares |d tau / d psi| (central difference)
// against L * Lambda * diam / <nu, u> from the certificate data.
inline TauDerivativeCheck tau_derivative_check(const ConformalField& field, double theta_xi,
                                               double psi, const SimplicityCertificate& cert,
                                               double fd_step = 1e-5) {
  TauDerivativeCheck out;
  Vec2 xi = from_angle(theta_xi);
  Vec2 nu_in = -xi;
  Vec2 tangent = rot90(xi);
  auto dir = [&](double a) { return nu_in * std::cos(a) + tangent * std::sin(a); };

  ShootOptions opts;
  opts.want_trace = false;
  opts.want_jacobi = false;
  GeodesicTrace center = shoot(field, xi, unit_speed_velocity(field, xi, dir(psi)), opts);
  Vec2 nu_out = normalized(center.exit_point);
  double transversality = dot(nu_out, center.exit_dir);
  if (transversality < 1e-3) {
    out.skipped = true;
    return out;
  }
  GeodesicTrace hi = shoot(field, xi, unit_speed_velocity(field, xi, dir(psi + fd_step)), opts);
  GeodesicTrace lo = shoot(field, xi, unit_speed_velocity(field, xi, dir(psi - fd_step)), opts);
  out.numeric_norm = std::fabs(hi.exit_time - lo.exit_time) / (2.0 * fd_step);
  double diam = 2.0 * field.domain().outer_radius;
  out.bound = cert.big_l * field.big_lambda() * diam / transversality;
  return out;
}

}  // namespace tomo
