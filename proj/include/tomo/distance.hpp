#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>
#include <string>
#include <vector>

#include "tomo/common.hpp"
#include "tomo/geodesics.hpp"
#include "tomo/io.hpp"
#include "tomo/parallel.hpp"

namespace tomo {

// Boundary distance function Gamma(xi, eta) between boundary points, solved
// as a two-point BVP by shooting: bracket the exit angle with a fan, then
// Newton on the exit-angle mismatch with the derivative supplied by the
// normal Jacobi solution. Pairs closer than the collar gap are exact chords
// (the segment never leaves the collar, where the metric is Euclidean).

struct BvpOptions {
  double arc_tol = 1e-8;
  int fan_size = 96;
  int max_newton = 40;
  ShootOptions shoot = make_shoot_defaults();

  static ShootOptions make_shoot_defaults() {
    ShootOptions s;
    s.want_trace = false;
    s.want_jacobi = true;
    return s;
  }
};

struct BoundaryDistanceResult {
  double gamma = 0.0;
  Vec2 v_xi{0.0, 0.0};  // Euclidean-unit start direction (travel xi -> eta)
  Vec2 u_eta{0.0, 0.0}; // Euclidean-unit arrival direction at eta
  double residual = 0.0;
  double psi = std::numeric_limits<double>::quiet_NaN();  // converged shoot angle
  int newton_iters = 0;
  bool exact_chord = false;
  bool used_fan = false;
};

namespace detail {

struct ExitSample {
  double delta_exit = 0.0;  // exit angle minus start angle, wrapped to (0, 2pi)
  double dderiv = 0.0;      // d(delta_exit)/d(psi), valid when jacobi was on
  double tau = 0.0;
  Vec2 v, u, exit_point;
};

// Shoot from the boundary point at theta_xi with angle psi from the inward
// normal; report where it exits and (optionally) the angular derivative.
inline ExitSample exit_sample(const ConformalField& field, double theta_xi, double psi,
                              const ShootOptions& shoot_opts, bool want_deriv) {
  Vec2 xi = from_angle(theta_xi);
  Vec2 nu_in = -xi;
  Vec2 tangent = rot90(xi);
  Vec2 v = nu_in * std::cos(psi) + tangent * std::sin(psi);
  ShootOptions so = shoot_opts;
  so.want_jacobi = want_deriv;
  so.want_trace = false;
  GeodesicTrace tr = shoot(field, xi, v, so);
  ExitSample out;
  out.tau = tr.exit_time;
  out.v = v;
  out.u = tr.exit_dir;
  out.exit_point = tr.exit_point;
  double theta_exit = std::atan2(tr.exit_point.y, tr.exit_point.x);
  out.delta_exit = wrap_angle(theta_exit - theta_xi);
  if (want_deriv) {
    // Variation of the exit point under d(psi): J(tau) with J(0) = 0,
    // DJ(0) = dv/dpsi, projected onto the boundary tangent.
    Vec2 dv = -nu_in * std::sin(psi) + tangent * std::cos(psi);
    Vec2 p0 = tr.start_momentum;
    double bp = dot(dv, rot90(p0));  // pure normal component (a' = <dv, p0> = 0)
    Vec2 pT = tr.exit_momentum;
    Vec2 J = rot90(pT) * (bp * tr.end_b2 / norm2(pT));
    Vec2 nu_out = normalized(tr.exit_point);
    Vec2 gdot = tr.exit_dir;
    double transv = dot(nu_out, gdot);
    Vec2 deta = J - gdot * (dot(nu_out, J) / transv);
    Vec2 t_eta = rot90(nu_out);
    out.dderiv = dot(deta, t_eta);
  }
  return out;
}

// Fan of exit angles from one source point, shared by every target on that
// row of a table. delta_exit is strictly decreasing in psi for a simple
// metric, so a single sweep brackets all targets at once.
struct ExitFan {
  std::vector<double> psi;
  std::vector<double> delta_exit;
};

inline ExitFan row_fan(const ConformalField& field, double theta_xi, const BvpOptions& opts) {
  const double psi_lim = kPi / 2 - 1e-3;
  ExitFan fan;
  fan.psi.resize(opts.fan_size);
  fan.delta_exit.resize(opts.fan_size);
  for (int k = 0; k < opts.fan_size; ++k) {
    double psi = -psi_lim + 2 * psi_lim * k / (opts.fan_size - 1.0);
    ExitSample s = exit_sample(field, theta_xi, psi, opts.shoot, false);
    fan.psi[k] = psi;
    fan.delta_exit[k] = s.delta_exit;
  }
  return fan;
}

// Interpolated starting angle for a target exit separation, NaN if the fan
// does not bracket it.
inline double fan_start(const ExitFan& fan, double target) {
  for (std::size_t k = 0; k + 1 < fan.psi.size(); ++k) {
    double f0 = fan.delta_exit[k] - target;
    double f1 = fan.delta_exit[k + 1] - target;
    if (f0 >= 0.0 && f1 <= 0.0) {
      double denom = f0 - f1;
      if (denom <= 0.0) return 0.5 * (fan.psi[k] + fan.psi[k + 1]);
      return fan.psi[k] + (fan.psi[k + 1] - fan.psi[k]) * (f0 / denom);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

inline BoundaryDistanceResult boundary_distance(const ConformalField& field, double theta_xi,
                                                double theta_eta, const BvpOptions& opts = {},
                                                const double* warm_psi = nullptr) {
  BoundaryDistanceResult out;
  double delta = field.domain().boundary_gap();
  double target = wrap_angle(theta_eta - theta_xi);
  if (target == 0.0) {
    out.exact_chord = true;
    return out;  // coincident points: zero distance, directions undefined
  }
  double chord = chord_length(theta_xi, theta_eta);
  if (chord < delta) {
    Vec2 xi = from_angle(theta_xi);
    Vec2 eta = from_angle(theta_eta);
    Vec2 dir = normalized(eta - xi);
    out.gamma = chord;
    out.v_xi = dir;
    out.u_eta = dir;
    out.exact_chord = true;
    return out;
  }

  const double psi_lim = kPi / 2 - 1e-3;
  auto f_of = [&](const detail::ExitSample& s) { return s.delta_exit - target; };

  double lo = -psi_lim, hi = psi_lim;  // f(lo) > 0 > f(hi): delta_exit decreases in psi
  bool have_bracket = false;
  double psi0 = std::numeric_limits<double>::quiet_NaN();

  if (warm_psi && std::isfinite(*warm_psi) && std::fabs(*warm_psi) < psi_lim) {
    psi0 = *warm_psi;
  } else {
    out.used_fan = true;
    double prev_psi = -psi_lim;
    detail::ExitSample prev = detail::exit_sample(field, theta_xi, prev_psi, opts.shoot, false);
    double prev_f = f_of(prev);
    for (int k = 1; k < opts.fan_size; ++k) {
      double psi = -psi_lim + 2 * psi_lim * k / (opts.fan_size - 1.0);
      detail::ExitSample cur = detail::exit_sample(field, theta_xi, psi, opts.shoot, false);
      double f = f_of(cur);
      if (prev_f >= 0.0 && f <= 0.0) {
        lo = prev_psi;
        hi = psi;
        have_bracket = true;
        double denom = prev_f - f;
        psi0 = (denom > 0) ? prev_psi + (psi - prev_psi) * (prev_f / denom)
                           : 0.5 * (prev_psi + psi);
        break;
      }
      prev_psi = psi;
      prev_f = f;
    }
    if (!have_bracket)
      throw SolverError("boundary_distance: fan found no bracket (theta_xi=" + fmt_g17(theta_xi) +
                        ", theta_eta=" + fmt_g17(theta_eta) + ")");
  }

  double psi = psi0;
  detail::ExitSample s;
  for (int it = 0; it < opts.max_newton; ++it) {
    s = detail::exit_sample(field, theta_xi, psi, opts.shoot, true);
    double f = f_of(s);
    out.newton_iters = it + 1;
    if (std::fabs(f) < opts.arc_tol) {
      out.gamma = s.tau;
      out.v_xi = s.v;
      out.u_eta = s.u;
      out.residual = std::fabs(f);
      out.psi = psi;
      return out;
    }
    if (have_bracket) {
      if (f > 0.0)
        lo = psi;
      else
        hi = psi;
    }
    double step = (s.dderiv != 0.0) ? -f / s.dderiv : 0.0;
    double next = psi + step;
    bool bad = !std::isfinite(next) || std::fabs(next) >= psi_lim ||
               (have_bracket && (next <= std::min(lo, hi) || next >= std::max(lo, hi)));
    if (bad) {
      if (!have_bracket) break;  // warm start failed: fall back to the fan
      next = 0.5 * (lo + hi);
    }
    psi = next;
  }

  if (!have_bracket) {
    // Warm start did not converge; redo with a full fan.
    BvpOptions cold = opts;
    return boundary_distance(field, theta_xi, theta_eta, cold, nullptr);
  }
  throw SolverError("boundary_distance: Newton/bisection failed to converge (theta_xi=" +
                    fmt_g17(theta_xi) + ", theta_eta=" + fmt_g17(theta_eta) + ")");
}

// First-variation angular derivatives of Gamma, with the (xi, eta) solve
// already in hand. Boundary tangent T(theta) = (-sin, cos); the reversed ray
// arrives at xi with direction -v_xi.
inline std::pair<double, double> gamma_gradient(double theta_xi, double theta_eta,
                                                const BoundaryDistanceResult& r) {
  Vec2 t_xi = rot90(from_angle(theta_xi));
  Vec2 t_eta = rot90(from_angle(theta_eta));
  return {-dot(r.v_xi, t_xi), dot(r.u_eta, t_eta)};
}

// ============================================================================
// Distance tables on a uniform boundary grid
// ============================================================================

struct TableBuildStats {
  long newton_iters = 0;
  long fan_count = 0;
  long warm_fallbacks = 0;
  double max_residual = 0.0;
};

class DistanceTable {
 public:
  DistanceTable() = default;
  DistanceTable(int K, double delta) : K_(K), delta_(delta) {
    std::size_t nn = static_cast<std::size_t>(K) * K;
    gamma_.assign(nn, 0.0);
    z_.assign(nn, std::numeric_limits<double>::quiet_NaN());
    dgamma_.assign(nn, 0.0);
    residual_.assign(nn, 0.0);
    psi_.assign(nn, std::numeric_limits<double>::quiet_NaN());
    band_.assign(nn, 0);
  }

  int K() const { return K_; }
  double delta() const { return delta_; }
  double theta(int i) const { return kTwoPi * i / K_; }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * K_ + j; }

  double gamma(int i, int j) const { return gamma_[idx(i, j)]; }
  double z(int i, int j) const { return z_[idx(i, j)]; }
  double dgamma_dxi(int i, int j) const { return dgamma_[idx(i, j)]; }
  double residual(int i, int j) const { return residual_[idx(i, j)]; }
  double psi(int i, int j) const { return psi_[idx(i, j)]; }
  bool band(int i, int j) const { return band_[idx(i, j)] != 0; }

  std::vector<double>& gamma_data() { return gamma_; }
  const std::vector<double>& gamma_data() const { return gamma_; }
  std::vector<double>& z_data() { return z_; }
  const std::vector<double>& z_data() const { return z_; }
  std::vector<double>& dgamma_data() { return dgamma_; }
  const std::vector<double>& dgamma_data() const { return dgamma_; }
  std::vector<double>& residual_data() { return residual_; }
  std::vector<double>& psi_data() { return psi_; }
  const std::vector<double>& psi_data() const { return psi_; }
  std::vector<std::uint8_t>& band_data() { return band_; }

  std::uint64_t field_hash = 0;
  double field_lambda = 1.0;
  double field_big_lambda = 1.0;
  TableBuildStats stats;

  void save_csv(const std::filesystem::path& path) const {
    CsvWriter w("i,j,theta_i,theta_j,gamma,z,dgamma");
    for (int i = 0; i < K_; ++i)
      for (int j = 0; j < K_; ++j) {
        w.cell(i).cell(j).cell(theta(i)).cell(theta(j));
        w.cell(gamma(i, j)).cell(z(i, j)).cell(dgamma_dxi(i, j));
        w.end_row();
      }
    w.save(path);
  }

  void save_binary(const std::filesystem::path& gamma_path,
                   const std::filesystem::path& sidecar_path) const {
    write_f64_matrix(gamma_path, gamma_);
    nlohmann::json side = {{"K", K_},
                           {"delta", delta_},
                           {"field_hash", hex_u64(field_hash)},
                           {"layout", "row-major float64"},
                           {"lambda", field_lambda},
                           {"big_lambda", field_big_lambda}};
    write_text_file(sidecar_path, side.dump(2) + "\n");
  }

 private:
  int K_ = 0;
  double delta_ = 0.3;
  std::vector<double> gamma_, z_, dgamma_, residual_, psi_;
  std::vector<std::uint8_t> band_;
};

// Build the K x K table. Band pairs (chord < delta) and the diagonal are
// exact; the rest solve the BVP with a per-row fan shared across columns.
// `warm` reuses the converged shoot angles of a previous table of the same K
// (the workhorse of the MCMC likelihood, where consecutive fields differ by
// a small proposal step).
inline DistanceTable build_table(const ConformalField& field, int K, const BvpOptions& opts = {},
                                 unsigned threads = 1, const DistanceTable* warm = nullptr) {
  if (K < 32) throw ValidationError("table K must be >= 32");
  if (warm && warm->K() != K) throw ValidationError("warm table K mismatch");
  double delta = field.domain().boundary_gap();
  DistanceTable table(K, delta);
  table.field_hash = field.hash();
  table.field_lambda = field.lambda();
  table.field_big_lambda = field.big_lambda();

  std::vector<TableBuildStats> row_stats(static_cast<std::size_t>(K));
  std::string first_error;
  std::mutex error_mu;

  parallel_for(
      static_cast<std::size_t>(K),
      [&](std::size_t row) {
        int i = static_cast<int>(row);
        TableBuildStats& st = row_stats[row];
        double ti = table.theta(i);
        detail::ExitFan fan;
        bool have_fan = false;
        for (int j = i + 1; j < K; ++j) {
          double tj = table.theta(j);
          double chord = chord_length(ti, tj);
          std::size_t ij = table.idx(i, j);
          std::size_t ji = table.idx(j, i);
          if (chord < delta) {
            Vec2 dir = normalized(from_angle(tj) - from_angle(ti));
            table.gamma_data()[ij] = chord;
            table.gamma_data()[ji] = chord;
            table.z_data()[ij] = std::log(chord);
            table.z_data()[ji] = std::log(chord);
            table.dgamma_data()[ij] = -dot(dir, rot90(from_angle(ti)));
            table.dgamma_data()[ji] = dot(dir, rot90(from_angle(tj)));
            table.band_data()[ij] = 1;
            table.band_data()[ji] = 1;
            continue;
          }
          double start_psi = std::numeric_limits<double>::quiet_NaN();
          if (warm && !warm->band(i, j)) start_psi = warm->psi(i, j);
          if (!std::isfinite(start_psi)) {
            if (!have_fan) {
              fan = detail::row_fan(field, ti, opts);
              have_fan = true;
              ++st.fan_count;
            }
            start_psi = detail::fan_start(fan, wrap_angle(tj - ti));
          }
          BoundaryDistanceResult r;
          try {
            r = boundary_distance(field, ti, tj, opts,
                                  std::isfinite(start_psi) ? &start_psi : nullptr);
          } catch (const SolverError& e) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (first_error.empty())
              first_error = "table pair (" + std::to_string(i) + "," + std::to_string(j) +
                            "): " + e.what();
            throw;
          }
          if (r.used_fan) {
            ++st.fan_count;
            if (warm) ++st.warm_fallbacks;
          }
          st.newton_iters += r.newton_iters;
          st.max_residual = std::max(st.max_residual, r.residual);
          auto [dxi_i, deta_j] = gamma_gradient(ti, tj, r);
          table.gamma_data()[ij] = r.gamma;
          table.gamma_data()[ji] = r.gamma;
          table.z_data()[ij] = std::log(r.gamma);
          table.z_data()[ji] = std::log(r.gamma);
          table.dgamma_data()[ij] = dxi_i;
          // Reversed ray: leaves eta with -u_eta, so d/dtheta_j picks +<u, T>.
          table.dgamma_data()[ji] = deta_j;
          table.residual_data()[ij] = r.residual;
          table.residual_data()[ji] = r.residual;
          table.psi_data()[ij] = r.psi;
        }
        table.band_data()[table.idx(i, i)] = 1;
      },
      threads);

  for (const auto& st : row_stats) {
    table.stats.newton_iters += st.newton_iters;
    table.stats.fan_count += st.fan_count;
    table.stats.warm_fallbacks += st.warm_fallbacks;
    table.stats.max_residual = std::max(table.stats.max_residual, st.max_residual);
  }
  return table;
}

// ============================================================================
// Quadrature functionals on the boundary torus
// ============================================================================

// L2 norm of a masked table difference with the product measure d(theta) x
// d(theta) (uniform weights (2pi/K)^2; band entries contribute zero, which is
// exact for Gamma/Z differences because both tables are identical chords
// there).
inline double table_l2_diff(const DistanceTable& a, const DistanceTable& b, bool use_z) {
  if (a.K() != b.K()) throw ValidationError("table K mismatch");
  int K = a.K();
  double w = sqr(kTwoPi / K);
  double acc = 0.0;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      if (a.band(i, j) || b.band(i, j)) continue;
      double d = use_z ? (a.z(i, j) - b.z(i, j)) : (a.gamma(i, j) - b.gamma(i, j));
      acc += d * d * w;
    }
  return std::sqrt(acc);
}

inline double gamma_l2_diff(const DistanceTable& a, const DistanceTable& b) {
  return table_l2_diff(a, b, false);
}
inline double z_l2_diff(const DistanceTable& a, const DistanceTable& b) {
  return table_l2_diff(a, b, true);
}

// || d/dtheta_xi (Gamma_a - Gamma_b) ||_L2 over the torus.
inline double dgamma_dxi_l2_diff(const DistanceTable& a, const DistanceTable& b) {
  if (a.K() != b.K()) throw ValidationError("table K mismatch");
  int K = a.K();
  double w = sqr(kTwoPi / K);
  double acc = 0.0;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      if (a.band(i, j) || b.band(i, j)) continue;
      double d = a.dgamma_dxi(i, j) - b.dgamma_dxi(i, j);
      acc += d * d * w;
    }
  return std::sqrt(acc);
}

// || d/dtheta_xi (Z_a - Z_b) ||_L2 with dZ = dGamma / Gamma.
inline double dz_dxi_l2_diff(const DistanceTable& a, const DistanceTable& b) {
  if (a.K() != b.K()) throw ValidationError("table K mismatch");
  int K = a.K();
  double w = sqr(kTwoPi / K);
  double acc = 0.0;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      if (a.band(i, j) || b.band(i, j)) continue;
      double d = a.dgamma_dxi(i, j) / a.gamma(i, j) - b.dgamma_dxi(i, j) / b.gamma(i, j);
      acc += d * d * w;
    }
  return std::sqrt(acc);
}

// H1 norm of the Z difference; by symmetry of the tables the eta-derivative
// term equals the xi one.
inline double z_h1_diff(const DistanceTable& a, const DistanceTable& b) {
  double l2 = z_l2_diff(a, b);
  double d1 = dz_dxi_l2_diff(a, b);
  return std::sqrt(l2 * l2 + 2.0 * d1 * d1);
}

// Second finite differences of the Z difference where the full 3x3 stencil is
// off-band: a bounded-Hessian diagnostic, not a certified norm.
inline double z_h2_seminorm_diff(const DistanceTable& a, const DistanceTable& b) {
  if (a.K() != b.K()) throw ValidationError("table K mismatch");
  int K = a.K();
  double h = kTwoPi / K;
  double w = sqr(h);
  auto zd = [&](int i, int j) {
    int ii = (i % K + K) % K;
    int jj = (j % K + K) % K;
    return a.z(ii, jj) - b.z(ii, jj);
  };
  auto off_band = [&](int i, int j) {
    int ii = (i % K + K) % K;
    int jj = (j % K + K) % K;
    return !a.band(ii, jj) && !b.band(ii, jj);
  };
  double acc = 0.0;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      bool ok = true;
      for (int di = -1; di <= 1 && ok; ++di)
        for (int dj = -1; dj <= 1 && ok; ++dj) ok = off_band(i + di, j + dj);
      if (!ok) continue;
      double dxx = (zd(i + 1, j) - 2 * zd(i, j) + zd(i - 1, j)) / (h * h);
      double dyy = (zd(i, j + 1) - 2 * zd(i, j) + zd(i, j - 1)) / (h * h);
      double dxy = (zd(i + 1, j + 1) - zd(i + 1, j - 1) - zd(i - 1, j + 1) + zd(i - 1, j - 1)) /
                   (4 * h * h);
      acc += (dxx * dxx + 2 * dxy * dxy + dyy * dyy) * w;
    }
  return std::sqrt(acc);
}

// Log-distance view of a single table with its quadrature norms.
struct ZField {
  const DistanceTable* table = nullptr;

  double l2_norm() const {
    int K = table->K();
    double w = sqr(kTwoPi / K);
    double acc = 0.0;
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) {
        if (table->band(i, j)) continue;
        acc += sqr(table->z(i, j)) * w;
      }
    return std::sqrt(acc);
  }

  double dxi_l2_norm() const {
    int K = table->K();
    double w = sqr(kTwoPi / K);
    double acc = 0.0;
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) {
        if (table->band(i, j)) continue;
        acc += sqr(table->dgamma_dxi(i, j) / table->gamma(i, j)) * w;
      }
    return std::sqrt(acc);
  }
};

inline ZField z_field(const DistanceTable& table) { return ZField{&table}; }

// ============================================================================
// Fast log-distance evaluation at arbitrary boundary pairs
// ============================================================================

// Interpolates W = Z - log(chord) (smooth on the whole torus, identically
// zero on the near-diagonal band) with periodic Catmull-Rom bicubics, then
// adds back the exact log-chord. Removes the diagonal log singularity from
// the interpolation problem entirely.
class FastZ {
 public:
  FastZ() = default;

  explicit FastZ(const DistanceTable& table) : K_(table.K()), delta_(table.delta()) {
    w_.assign(static_cast<std::size_t>(K_) * K_, 0.0);
    for (int i = 0; i < K_; ++i)
      for (int j = 0; j < K_; ++j) {
        if (i == j || table.band(i, j)) continue;
        double chord = chord_length(table.theta(i), table.theta(j));
        w_[static_cast<std::size_t>(i) * K_ + j] = table.z(i, j) - std::log(chord);
      }
  }

  double operator()(double theta_x, double theta_y) const {
    double chord = chord_length(theta_x, theta_y);
    if (chord <= 0.0)
      throw DomainError("log-distance is undefined at coincident boundary points");
    double logc = std::log(chord);
    if (chord < delta_) return logc;
    return interp(theta_x, theta_y) + logc;
  }

  int K() const { return K_; }

 private:
  double interp(double tx, double ty) const {
    double gx = wrap_angle(tx) * K_ / kTwoPi;
    double gy = wrap_angle(ty) * K_ / kTwoPi;
    int ix = static_cast<int>(gx);
    int iy = static_cast<int>(gy);
    double fx = gx - ix;
    double fy = gy - iy;
    double wx[4], wy[4];
    catmull_rom(fx, wx);
    catmull_rom(fy, wy);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
      int ii = (ix + a - 1 + K_) % K_;
      const double* row = &w_[static_cast<std::size_t>(ii) * K_];
      double racc = 0.0;
      for (int b = 0; b < 4; ++b) {
        int jj = (iy + b - 1 + K_) % K_;
        racc += wy[b] * row[jj];
      }
      acc += wx[a] * racc;
    }
    return acc;
  }

  static void catmull_rom(double t, double w[4]) {
    double t2 = t * t, t3 = t2 * t;
    w[0] = -0.5 * t3 + t2 - 0.5 * t;
    w[1] = 1.5 * t3 - 2.5 * t2 + 1.0;
    w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
    w[3] = 0.5 * t3 - 0.5 * t2;
  }

  int K_ = 0;
  double delta_ = 0.3;
  std::vector<double> w_;
};

}  // namespace tomo
