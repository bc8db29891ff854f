#pragma once

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "tomo/basis.hpp"
#include "tomo/common.hpp"
#include "tomo/domain.hpp"

namespace tomo {

// A conformal factor n = exp(c) with c a finite combination of compactly
// supported modes. Evaluation goes through a bicubic Hermite node cache; the
// collar (r >= inner radius) short-circuits to the exact Euclidean values.
// Two cache tiers: `high` (512^2, Hermite-interpolated curvature, used by
// default) and `fast` (128^2, bilinear curvature, used inside samplers).

enum class CacheTier { high, fast };

struct CacheGrid {
  int n = 0;           // nodes per side
  double extent = 0.0; // nodes span [-extent, extent]
  double h = 0.0;
  double inv_h = 0.0;
  bool lap_hermite = false;
  std::vector<double> c, cx, cy, cxy;
  std::vector<double> lap, lapx, lapy, lapxy;
};

namespace detail {

inline void hermite_w(double t, double w[4]) {
  double t2 = t * t, t3 = t2 * t;
  w[0] = 2 * t3 - 3 * t2 + 1;
  w[1] = t3 - 2 * t2 + t;
  w[2] = -2 * t3 + 3 * t2;
  w[3] = t3 - t2;
}

inline void hermite_dw(double t, double w[4]) {
  double t2 = t * t;
  w[0] = 6 * t2 - 6 * t;
  w[1] = 3 * t2 - 4 * t + 1;
  w[2] = -6 * t2 + 6 * t;
  w[3] = 3 * t2 - 2 * t;
}

// Per-basis node grids of every mode's (c, cx, cy, cxy, lap), single
// precision, used to assemble fast-tier caches with one weighted pass.
struct ModeGrids {
  int n = 0;
  double extent = 0.0;
  double h = 0.0;
  int mode_count = 0;
  // Layout: data[((channel * n * n) + node) * mode_count + j].
  std::vector<float> data;
};

inline std::shared_ptr<const ModeGrids> mode_grids_for(
    const std::shared_ptr<const FourierBesselBasis>& basis, int n, double extent) {
  static std::mutex mu;
  static std::map<std::pair<const FourierBesselBasis*, int>, std::shared_ptr<const ModeGrids>>
      cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(basis.get(), n);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  auto grids = std::make_shared<ModeGrids>();
  grids->n = n;
  grids->extent = extent;
  grids->h = 2.0 * extent / (n - 1);
  grids->mode_count = basis->mode_count();
  std::size_t nn = static_cast<std::size_t>(n) * n;
  std::size_t J = static_cast<std::size_t>(grids->mode_count);
  grids->data.assign(5 * nn * J, 0.0f);

  std::vector<double> unit(J, 0.0);
  double r0 = basis->domain().inner_radius;
  for (int iy = 0; iy < n; ++iy) {
    double y = -extent + iy * grids->h;
    for (int ix = 0; ix < n; ++ix) {
      double x = -extent + ix * grids->h;
      if (x * x + y * y >= r0 * r0) continue;
      std::size_t node = static_cast<std::size_t>(iy) * n + ix;
      for (std::size_t j = 0; j < J; ++j) {
        unit[j] = 1.0;
        PointSecond p = basis->eval_second(unit, x, y);
        unit[j] = 0.0;
        grids->data[(0 * nn + node) * J + j] = static_cast<float>(p.c);
        grids->data[(1 * nn + node) * J + j] = static_cast<float>(p.cx);
        grids->data[(2 * nn + node) * J + j] = static_cast<float>(p.cy);
        grids->data[(3 * nn + node) * J + j] = static_cast<float>(p.cxy);
        grids->data[(4 * nn + node) * J + j] = static_cast<float>(p.cxx + p.cyy);
      }
    }
  }
  cache[key] = grids;
  return grids;
}

}  // namespace detail

struct FieldEval {
  double n = 1.0;
  double c = 0.0;
  Vec2 grad_n{0.0, 0.0};
  Vec2 grad_log_n{0.0, 0.0};
};

class ConformalField {
 public:
  static constexpr double kExtentMargin = 0.06;

  static ConformalField build(std::shared_ptr<const FourierBesselBasis> basis,
                              std::vector<double> coeffs, CacheTier tier = CacheTier::high) {
    basis->check_coeffs(coeffs);
    ConformalField f;
    f.basis_ = std::move(basis);
    f.coeffs_ = std::move(coeffs);
    f.tier_ = tier;
    double r0 = f.basis_->domain().inner_radius;
    f.r0_sq_ = r0 * r0;

    CacheGrid& g = f.grid_;
    g.n = (tier == CacheTier::high) ? 512 : 128;
    g.extent = r0 + kExtentMargin;
    g.h = 2.0 * g.extent / (g.n - 1);
    g.inv_h = 1.0 / g.h;
    g.lap_hermite = (tier == CacheTier::high);
    std::size_t nn = static_cast<std::size_t>(g.n) * g.n;
    g.c.assign(nn, 0.0);
    g.cx.assign(nn, 0.0);
    g.cy.assign(nn, 0.0);
    g.cxy.assign(nn, 0.0);
    g.lap.assign(nn, 0.0);

    if (tier == CacheTier::high) {
      for (int iy = 0; iy < g.n; ++iy) {
        double y = -g.extent + iy * g.h;
        for (int ix = 0; ix < g.n; ++ix) {
          double x = -g.extent + ix * g.h;
          if (x * x + y * y >= f.r0_sq_) continue;
          PointSecond p = f.basis_->eval_second(f.coeffs_, x, y);
          std::size_t k = static_cast<std::size_t>(iy) * g.n + ix;
          g.c[k] = p.c;
          g.cx[k] = p.cx;
          g.cy[k] = p.cy;
          g.cxy[k] = p.cxy;
          g.lap[k] = p.cxx + p.cyy;
        }
      }
      f.fill_lap_hermite();
    } else {
      auto grids = detail::mode_grids_for(f.basis_, g.n, g.extent);
      std::size_t J = static_cast<std::size_t>(grids->mode_count);
      std::vector<double>* channels[5] = {&g.c, &g.cx, &g.cy, &g.cxy, &g.lap};
      for (int ch = 0; ch < 5; ++ch) {
        const float* base = grids->data.data() + static_cast<std::size_t>(ch) * nn * J;
        std::vector<double>& out = *channels[ch];
        for (std::size_t node = 0; node < nn; ++node) {
          const float* row = base + node * J;
          double acc = 0.0;
          for (std::size_t j = 0; j < J; ++j) acc += f.coeffs_[j] * row[j];
          out[node] = acc;
        }
      }
    }

    f.scan_bounds();
    f.certify_c3();
    f.hash_ = f.compute_hash();
    return f;
  }

  const DomainSpec& domain() const { return basis_->domain(); }
  const FourierBesselBasis& basis() const { return *basis_; }
  std::shared_ptr<const FourierBesselBasis> basis_ptr() const { return basis_; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  CacheTier tier() const { return tier_; }
  const CacheGrid& grid() const { return grid_; }

  double lambda() const { return lambda_; }
  double big_lambda() const { return big_lambda_; }
  double c3_bound() const { return c3_bound_; }
  double curvature_max() const { return k_max_; }
  double curvature_sup() const { return curv_max_; }
  double curvature_inf() const { return curv_min_; }
  double c_min() const { return c_min_; }
  double c_max() const { return c_max_; }
  std::uint64_t hash() const { return hash_; }
  std::string hash_hex() const { return hex_u64(hash_); }

  // n, grad n, grad log n at a point of the closed unit disk (cache path).
  FieldEval eval(Vec2 p) const {
    double R = domain().outer_radius;
    if (norm2(p) > R * R * (1.0 + 1e-12))
      throw DomainError("eval outside the closed disk");
    FieldEval out;
    if (norm2(p) >= r0_sq_) return out;
    double c, cx, cy;
    sample_c(p.x, p.y, c, cx, cy);
    out.c = c;
    out.n = std::exp(c);
    out.grad_log_n = {cx, cy};
    out.grad_n = {out.n * cx, out.n * cy};
    return out;
  }

  // Same contract through the dense radial tables (reference path).
  FieldEval eval_analytic(Vec2 p) const {
    double R = domain().outer_radius;
    if (norm2(p) > R * R * (1.0 + 1e-12))
      throw DomainError("eval outside the closed disk");
    FieldEval out;
    if (norm2(p) >= r0_sq_) return out;
    double c, cx, cy;
    basis_->eval(coeffs_, p.x, p.y, c, cx, cy);
    out.c = c;
    out.n = std::exp(c);
    out.grad_log_n = {cx, cy};
    out.grad_n = {out.n * cx, out.n * cy};
    return out;
  }

  double laplacian_c(Vec2 p) const {
    if (norm2(p) >= r0_sq_) return 0.0;
    return sample_lap(p.x, p.y);
  }

  // Gaussian curvature of the metric exp(2c) * (dx^2 + dy^2).
  double curvature(Vec2 p) const {
    if (norm2(p) >= r0_sq_) return 0.0;
    double c, cx, cy;
    sample_c(p.x, p.y, c, cx, cy);
    return -std::exp(-2.0 * c) * sample_lap(p.x, p.y);
  }

  double inner_radius_sq() const { return r0_sq_; }

  nlohmann::json to_json() const {
    return {{"domain", domain().to_json()}, {"coefficients", coeffs_}};
  }

  static ConformalField from_json(const nlohmann::json& j, CacheTier tier = CacheTier::high) {
    if (!j.is_object() || !j.contains("domain") || !j.contains("coefficients"))
      throw ConfigError("field JSON must contain 'domain' and 'coefficients'");
    DomainSpec domain = DomainSpec::from_json(j.at("domain"));
    std::vector<double> coeffs = j.at("coefficients").get<std::vector<double>>();
    if (coeffs.empty()) throw ConfigError("field JSON has an empty coefficient list");
    auto basis = FourierBesselBasis::get(domain, static_cast<int>(coeffs.size()));
    return build(basis, std::move(coeffs), tier);
  }

  // --------------------------------------------------------------------
  // Cache sampling (inlined hot path; cursors owned by the caller's view)
  // --------------------------------------------------------------------

  void sample_c(double x, double y, double& c, double& cx, double& cy) const {
    const CacheGrid& g = grid_;
    double sx = (x + g.extent) * g.inv_h;
    double sy = (y + g.extent) * g.inv_h;
    int ix = static_cast<int>(sx);
    int iy = static_cast<int>(sy);
    if (ix < 0) ix = 0;
    if (iy < 0) iy = 0;
    if (ix > g.n - 2) ix = g.n - 2;
    if (iy > g.n - 2) iy = g.n - 2;
    double tx = sx - ix, ty = sy - iy;
    std::size_t k00 = static_cast<std::size_t>(iy) * g.n + ix;
    std::size_t k10 = k00 + 1;
    std::size_t k01 = k00 + g.n;
    std::size_t k11 = k01 + 1;
    double wx[4], wy[4], dwx[4], dwy[4];
    detail::hermite_w(tx, wx);
    detail::hermite_w(ty, wy);
    detail::hermite_dw(tx, dwx);
    detail::hermite_dw(ty, dwy);
    double h = g.h;
    c = cx = cy = 0.0;
    const std::size_t ks[4] = {k00, k10, k01, k11};
    const int xi[4] = {0, 2, 0, 2};  // value-weight index per corner (x side)
    const int yi[4] = {0, 0, 2, 2};
    for (int corner = 0; corner < 4; ++corner) {
      std::size_t k = ks[corner];
      int a = xi[corner], b = yi[corner];
      double f = g.c[k], fx = g.cx[k], fy = g.cy[k], fxy = g.cxy[k];
      double A = wx[a], Abar = wx[a + 1];
      double B = wy[b], Bbar = wy[b + 1];
      double dA = dwx[a], dAbar = dwx[a + 1];
      double dB = dwy[b], dBbar = dwy[b + 1];
      c += f * A * B + fx * h * Abar * B + fy * h * A * Bbar + fxy * h * h * Abar * Bbar;
      cx += (f * dA * B + fx * h * dAbar * B + fy * h * dA * Bbar + fxy * h * h * dAbar * Bbar) *
            g.inv_h;
      cy += (f * A * dB + fx * h * Abar * dB + fy * h * A * dBbar + fxy * h * h * Abar * dBbar) *
            g.inv_h;
    }
  }

  double sample_lap(double x, double y) const {
    const CacheGrid& g = grid_;
    double sx = (x + g.extent) * g.inv_h;
    double sy = (y + g.extent) * g.inv_h;
    int ix = static_cast<int>(sx);
    int iy = static_cast<int>(sy);
    if (ix < 0) ix = 0;
    if (iy < 0) iy = 0;
    if (ix > g.n - 2) ix = g.n - 2;
    if (iy > g.n - 2) iy = g.n - 2;
    double tx = sx - ix, ty = sy - iy;
    std::size_t k00 = static_cast<std::size_t>(iy) * g.n + ix;
    std::size_t k10 = k00 + 1;
    std::size_t k01 = k00 + g.n;
    std::size_t k11 = k01 + 1;
    if (!g.lap_hermite) {
      double a = g.lap[k00] * (1 - tx) + g.lap[k10] * tx;
      double b = g.lap[k01] * (1 - tx) + g.lap[k11] * tx;
      return a * (1 - ty) + b * ty;
    }
    double wx[4], wy[4];
    detail::hermite_w(tx, wx);
    detail::hermite_w(ty, wy);
    double h = g.h;
    double out = 0.0;
    const std::size_t ks[4] = {k00, k10, k01, k11};
    const int xi[4] = {0, 2, 0, 2};
    const int yi[4] = {0, 0, 2, 2};
    for (int corner = 0; corner < 4; ++corner) {
      std::size_t k = ks[corner];
      int a = xi[corner], b = yi[corner];
      out += g.lap[k] * wx[a] * wy[b] + g.lapx[k] * h * wx[a + 1] * wy[b] +
             g.lapy[k] * h * wx[a] * wy[b + 1] + g.lapxy[k] * h * h * wx[a + 1] * wy[b + 1];
    }
    return out;
  }

 private:
  void fill_lap_hermite() {
    CacheGrid& g = grid_;
    std::size_t nn = static_cast<std::size_t>(g.n) * g.n;
    g.lapx.assign(nn, 0.0);
    g.lapy.assign(nn, 0.0);
    g.lapxy.assign(nn, 0.0);
    auto idx = [&](int ix, int iy) { return static_cast<std::size_t>(iy) * g.n + ix; };
    double inv12h = 1.0 / (12.0 * g.h);
    for (int iy = 2; iy < g.n - 2; ++iy)
      for (int ix = 2; ix < g.n - 2; ++ix) {
        g.lapx[idx(ix, iy)] = (g.lap[idx(ix - 2, iy)] - 8.0 * g.lap[idx(ix - 1, iy)] +
                               8.0 * g.lap[idx(ix + 1, iy)] - g.lap[idx(ix + 2, iy)]) *
                              inv12h;
        g.lapy[idx(ix, iy)] = (g.lap[idx(ix, iy - 2)] - 8.0 * g.lap[idx(ix, iy - 1)] +
                               8.0 * g.lap[idx(ix, iy + 1)] - g.lap[idx(ix, iy + 2)]) *
                              inv12h;
      }
    for (int iy = 2; iy < g.n - 2; ++iy)
      for (int ix = 2; ix < g.n - 2; ++ix)
        g.lapxy[idx(ix, iy)] = (g.lapx[idx(ix, iy - 2)] - 8.0 * g.lapx[idx(ix, iy - 1)] +
                                8.0 * g.lapx[idx(ix, iy + 1)] - g.lapx[idx(ix, iy + 2)]) *
                               inv12h;
  }

  void scan_bounds() {
    const CacheGrid& g = grid_;
    c_min_ = 0.0;
    c_max_ = 0.0;
    k_max_ = 0.0;
    curv_max_ = 0.0;
    curv_min_ = 0.0;
    for (std::size_t k = 0; k < g.c.size(); ++k) {
      c_min_ = std::min(c_min_, g.c[k]);
      c_max_ = std::max(c_max_, g.c[k]);
      double curv = -g.lap[k] * std::exp(-2.0 * g.c[k]);
      curv_max_ = std::max(curv_max_, curv);
      curv_min_ = std::min(curv_min_, curv);
      k_max_ = std::max(k_max_, std::fabs(curv));
    }
    double amp = std::max(std::fabs(c_min_), std::fabs(c_max_));
    lambda_ = std::exp(-amp);
    big_lambda_ = std::exp(amp);
  }

  // Finite-difference certification of all partials of order <= 3 on a node
  // subgrid; the bound scales exactly linearly in the coefficients.
  void certify_c3() {
    const CacheGrid& g = grid_;
    int stride = (tier_ == CacheTier::high) ? 2 : 1;
    double h = g.h * stride;
    auto at = [&](int ix, int iy) {
      return g.c[static_cast<std::size_t>(iy * stride) * g.n + static_cast<std::size_t>(ix * stride)];
    };
    int n = (g.n - 1) / stride + 1;
    double best = 0.0;
    for (int iy = 2; iy < n - 2; ++iy) {
      for (int ix = 2; ix < n - 2; ++ix) {
        double f = at(ix, iy);
        double fxm = at(ix - 1, iy), fxp = at(ix + 1, iy);
        double fym = at(ix, iy - 1), fyp = at(ix, iy + 1);
        double fxm2 = at(ix - 2, iy), fxp2 = at(ix + 2, iy);
        double fym2 = at(ix, iy - 2), fyp2 = at(ix, iy + 2);
        double fpp = at(ix + 1, iy + 1), fpm = at(ix + 1, iy - 1);
        double fmp = at(ix - 1, iy + 1), fmm = at(ix - 1, iy - 1);
        double dx = (fxp - fxm) / (2 * h);
        double dy = (fyp - fym) / (2 * h);
        double dxx = (fxp - 2 * f + fxm) / (h * h);
        double dyy = (fyp - 2 * f + fym) / (h * h);
        double dxy = (fpp - fpm - fmp + fmm) / (4 * h * h);
        double dxxx = (fxp2 - 2 * fxp + 2 * fxm - fxm2) / (2 * h * h * h);
        double dyyy = (fyp2 - 2 * fyp + 2 * fym - fym2) / (2 * h * h * h);
        double dxxy = ((fpp - 2 * fyp + fmp) - (fpm - 2 * fym + fmm)) / (2 * h * h * h);
        double dxyy = ((fpp - 2 * fxp + fpm) - (fmp - 2 * fxm + fmm)) / (2 * h * h * h);
        for (double v : {f, dx, dy, dxx, dyy, dxy, dxxx, dyyy, dxxy, dxyy})
          best = std::max(best, std::fabs(v));
      }
    }
    c3_bound_ = best;
  }

  std::uint64_t compute_hash() const {
    std::uint64_t h = fnv1a(&basis_->domain().outer_radius, sizeof(double));
    h = fnv1a(&basis_->domain().inner_radius, sizeof(double), h);
    int mc = basis_->mode_count();
    h = fnv1a(&mc, sizeof(mc), h);
    h = fnv1a(coeffs_.data(), coeffs_.size() * sizeof(double), h);
    return h;
  }

  std::shared_ptr<const FourierBesselBasis> basis_;
  std::vector<double> coeffs_;
  CacheTier tier_ = CacheTier::high;
  CacheGrid grid_;
  double r0_sq_ = 0.49;
  double lambda_ = 1.0;
  double big_lambda_ = 1.0;
  double c3_bound_ = 0.0;
  double k_max_ = 0.0;
  double curv_max_ = 0.0;
  double curv_min_ = 0.0;
  double c_min_ = 0.0;
  double c_max_ = 0.0;
  std::uint64_t hash_ = 0;
};

// ============================================================================
// Named presets
// ============================================================================

inline std::vector<double> preset_coefficients(const std::string& name, int mode_count = 32) {
  if (mode_count < 8) throw ConfigError("presets need at least 8 modes");
  std::vector<double> c(static_cast<std::size_t>(mode_count), 0.0);
  if (name == "flat") return c;
  if (name == "bump") {
    c[0] = 0.2;
    return c;
  }
  if (name == "twobump") {
    c[0] = 0.15;
    c[3] = 0.064;  // (m=2, l=1) cosine: two lobes along the x axis
    return c;
  }
  if (name == "ringbump") {
    c[0] = -0.04;
    c[5] = 0.14;  // (m=0, l=2): ring-shaped slow region
    return c;
  }
  if (name == "deepwell") {
    c[0] = -1.1;  // strong fast core; bends rays around the center
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

inline ConformalField preset_field(const std::string& name, int mode_count = 32,
                                   CacheTier tier = CacheTier::high) {
  DomainSpec domain;
  auto basis = FourierBesselBasis::get(domain, mode_count);
  return ConformalField::build(basis, preset_coefficients(name, mode_count), tier);
}

}  // namespace tomo
