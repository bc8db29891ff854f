#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "tomo/common.hpp"
#include "tomo/domain.hpp"

namespace tomo {

// Smooth compactly supported basis on the inner disk:
//   psi(r, theta) = phi(r) * J_m(j_{m,l} r / r0) * {cos, sin}(m theta)
// where phi is a C-infinity bump that vanishes with all derivatives at r0,
// so every finite combination vanishes identically on the collar.

// ============================================================================
// Radial bump cutoff phi(r) = exp(1 - 1/(1 - (r/r0)^2)) on [0, r0)
// ============================================================================

struct BumpCutoff {
  double r0 = 0.7;

  // Value and derivatives d^k/dr^k for k = 0..3. Zero for r >= r0.
  void eval(double r, double out[4]) const {
    out[0] = out[1] = out[2] = out[3] = 0.0;
    if (r >= r0 || r < 0.0) return;
    double u = (r / r0) * (r / r0);
    double one_minus = 1.0 - u;
    double w1p = 1.0 / one_minus;  // (1-u)^-1
    double w = w1p;
    if (w > 700.0) return;  // exp underflows; all derivatives vanish
    double w2 = w1p * w1p;
    double w3 = w2 * w1p;
    double w4 = w3 * w1p;
    double up = 2.0 * r / (r0 * r0);
    double upp = 2.0 / (r0 * r0);
    // Derivatives of w(r) = (1-u)^-1 via the chain rule.
    double wr = up * w2;
    double wrr = upp * w2 + 2.0 * up * up * w3;
    double wrrr = 6.0 * up * upp * w3 + 6.0 * up * up * up * w4;
    double phi = std::exp(1.0 - w);
    out[0] = phi;
    out[1] = -wr * phi;
    out[2] = (wr * wr - wrr) * phi;
    out[3] = (3.0 * wr * wrr - wrrr - wr * wr * wr) * phi;
  }
};

// ============================================================================
// Bessel J helpers (values, derivatives, zeros)
// ============================================================================

inline double bessel_j(int m, double x) {
  if (m >= 0) return std::cyl_bessel_j(static_cast<double>(m), x);
  double v = std::cyl_bessel_j(static_cast<double>(-m), x);
  return (-m) % 2 == 0 ? v : -v;
}

// d^k/dx^k J_m(x) via J^(k)_m = 2^-k * sum_i (-1)^i C(k,i) J_{m-k+2i}.
inline double bessel_j_deriv(int m, int k, double x) {
  static const double binom[4][4] = {
      {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  double sum = 0.0;
  for (int i = 0; i <= k; ++i) {
    double term = binom[k][i] * bessel_j(m - k + 2 * i, x);
    sum += (i % 2 == 0) ? term : -term;
  }
  return std::ldexp(sum, -k);
}

// First `count` positive zeros of J_m, by scan + bisection + Newton polish.
inline std::vector<double> bessel_j_zeros(int m, int count) {
  std::vector<double> zeros;
  zeros.reserve(count);
  double x = (m == 0) ? 2.0 : (m + 1.0);
  double prev_x = x;
  double prev_f = bessel_j(m, x);
  const double step = 0.1;
  while (static_cast<int>(zeros.size()) < count) {
    x += step;
    double f = bessel_j(m, x);
    if (prev_f == 0.0) {
      zeros.push_back(prev_x);
    } else if (f == 0.0 || (prev_f > 0) != (f > 0)) {
      double lo = prev_x, hi = x;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = bessel_j(m, mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm > 0) == (prev_f > 0))
          lo = mid;
        else
          hi = mid;
      }
      double z = 0.5 * (lo + hi);
      for (int it = 0; it < 4; ++it) {
        double d = bessel_j_deriv(m, 1, z);
        if (d == 0.0) break;
        z -= bessel_j(m, z) / d;
      }
      zeros.push_back(z);
    }
    prev_x = x;
    prev_f = f;
    if (x > 500.0) throw SolverError("bessel zero scan ran away");
  }
  return zeros;
}

// ============================================================================
// Dense radial tables: cubic Hermite interpolation of R(r) = phi(r) J_m(k r)
// and its first two derivatives, accurate to ~1e-12 at 4096 nodes.
// ============================================================================

class RadialTable {
 public:
  RadialTable() = default;

  RadialTable(const BumpCutoff& bump, int m, double k, int nodes = 4097) {
    m_ = m;
    k_ = k;
    r0_ = bump.r0;
    n_ = nodes;
    h_ = r0_ / (nodes - 1);
    v_.resize(4 * static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) {
      double r = i * h_;
      double phi[4];
      bump.eval(r, phi);
      double b[4];
      for (int d = 0; d <= 3; ++d) b[d] = std::pow(k, d) * bessel_j_deriv(m, d, r * k);
      // Leibniz products for R^(d), d = 0..3.
      double* row = &v_[4 * static_cast<std::size_t>(i)];
      row[0] = phi[0] * b[0];
      row[1] = phi[1] * b[0] + phi[0] * b[1];
      row[2] = phi[2] * b[0] + 2.0 * phi[1] * b[1] + phi[0] * b[2];
      row[3] = phi[3] * b[0] + 3.0 * phi[2] * b[1] + 3.0 * phi[1] * b[2] + phi[0] * b[3];
    }
    // Endpoint: everything vanishes at r0 with all derivatives.
    double* last = &v_[4 * static_cast<std::size_t>(nodes - 1)];
    last[0] = last[1] = last[2] = last[3] = 0.0;
  }

  // R, R', R'' at r (zero for r >= r0). Cubic Hermite per derivative order,
  // using the next order as slope data.
  void eval(double r, double& val, double& d1, double& d2) const {
    if (r >= r0_ || r < 0.0) {
      val = d1 = d2 = 0.0;
      return;
    }
    double s = r / h_;
    int i = static_cast<int>(s);
    if (i > n_ - 2) i = n_ - 2;
    double t = s - i;
    const double* a = &v_[4 * static_cast<std::size_t>(i)];
    const double* b = a + 4;
    double h00, h10, h01, h11;
    hermite_weights(t, h00, h10, h01, h11);
    val = h00 * a[0] + h10 * h_ * a[1] + h01 * b[0] + h11 * h_ * b[1];
    d1 = h00 * a[1] + h10 * h_ * a[2] + h01 * b[1] + h11 * h_ * b[2];
    d2 = h00 * a[2] + h10 * h_ * a[3] + h01 * b[2] + h11 * h_ * b[3];
  }

  double value(double r) const {
    double v, d1, d2;
    eval(r, v, d1, d2);
    return v;
  }

 private:
  static void hermite_weights(double t, double& h00, double& h10, double& h01, double& h11) {
    double t2 = t * t;
    double t3 = t2 * t;
    h00 = 2 * t3 - 3 * t2 + 1;
    h10 = t3 - 2 * t2 + t;
    h01 = -2 * t3 + 3 * t2;
    h11 = t3 - t2;
  }

  int m_ = 0;
  double k_ = 1.0;
  double r0_ = 0.7;
  int n_ = 0;
  double h_ = 1.0;
  std::vector<double> v_;  // per node: R, R', R'', R'''
};

// ============================================================================
// Mode enumeration and evaluation
// ============================================================================

struct BasisMode {
  int m = 0;          // angular frequency
  int l = 1;          // radial index (which Bessel zero)
  bool sine = false;  // sin(m theta) vs cos(m theta); m = 0 is cosine only
  double zero = 0.0;  // j_{m,l}
  int radial = 0;     // index into the radial table array
};

struct PointSecond {
  double c = 0.0;
  double cx = 0.0, cy = 0.0;
  double cxx = 0.0, cxy = 0.0, cyy = 0.0;
};

class FourierBesselBasis {
 public:
  FourierBesselBasis(const DomainSpec& domain, int mode_count) : domain_(domain) {
    domain.validate();
    if (mode_count < 1) throw ValidationError("basis mode_count must be >= 1");
    bump_.r0 = domain.inner_radius;

    // Enumerate (m, l) pairs ordered by zero magnitude; m >= 1 contributes a
    // cosine and a sine mode at the same zero.
    struct Cand {
      double zero;
      int m, l;
    };
    std::vector<Cand> cands;
    int max_m = 2 + static_cast<int>(std::sqrt(2.0 * mode_count));
    int per_m = 2 + mode_count;
    for (int m = 0; m <= max_m; ++m) {
      auto zs = bessel_j_zeros(m, per_m);
      for (int l = 1; l <= static_cast<int>(zs.size()); ++l)
        cands.push_back({zs[l - 1], m, l});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.zero != b.zero) return a.zero < b.zero;
      return a.m < b.m;
    });

    std::map<std::pair<int, int>, int> radial_index;
    for (const Cand& cand : cands) {
      if (static_cast<int>(modes_.size()) >= mode_count) break;
      auto key = std::make_pair(cand.m, cand.l);
      if (!radial_index.count(key)) {
        radial_index[key] = static_cast<int>(radials_.size());
        radials_.emplace_back(bump_, cand.m, cand.zero / domain.inner_radius);
      }
      int ri = radial_index[key];
      modes_.push_back({cand.m, cand.l, false, cand.zero, ri});
      if (cand.m >= 1 && static_cast<int>(modes_.size()) < mode_count)
        modes_.push_back({cand.m, cand.l, true, cand.zero, ri});
    }
    max_m_ = 0;
    for (const auto& mode : modes_) max_m_ = std::max(max_m_, mode.m);
  }

  // Shared, immutable basis instances keyed by (inner radius, mode count).
  static std::shared_ptr<const FourierBesselBasis> get(const DomainSpec& domain, int mode_count) {
    static std::mutex mu;
    static std::map<std::pair<double, int>, std::shared_ptr<const FourierBesselBasis>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(domain.inner_radius, mode_count);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto basis = std::make_shared<const FourierBesselBasis>(domain, mode_count);
    cache[key] = basis;
    return basis;
  }

  const DomainSpec& domain() const { return domain_; }
  int mode_count() const { return static_cast<int>(modes_.size()); }
  const std::vector<BasisMode>& modes() const { return modes_; }

  // c and its gradient at a point (analytic reference path).
  void eval(const std::vector<double>& coeffs, double x, double y, double& c, double& cx,
            double& cy) const {
    check_coeffs(coeffs);
    c = cx = cy = 0.0;
    double r2 = x * x + y * y;
    double r0 = domain_.inner_radius;
    if (r2 >= r0 * r0) return;
    double r = std::sqrt(r2);
    double theta = std::atan2(y, x);
    double ct = (r > 0) ? x / r : 1.0;
    double st = (r > 0) ? y / r : 0.0;

    std::vector<double> R(radials_.size()), R1(radials_.size()), R2(radials_.size());
    for (std::size_t i = 0; i < radials_.size(); ++i) radials_[i].eval(r, R[i], R1[i], R2[i]);
    std::vector<double> cm(max_m_ + 1), sm(max_m_ + 1);
    angular_harmonics(theta, cm, sm);

    for (std::size_t j = 0; j < modes_.size(); ++j) {
      double a = coeffs[j];
      if (a == 0.0) continue;
      const BasisMode& mode = modes_[j];
      double T = mode.sine ? sm[mode.m] : cm[mode.m];
      double Tp = mode.sine ? mode.m * cm[mode.m] : -mode.m * sm[mode.m];
      double cr = R1[mode.radial] * T;
      double cth = R[mode.radial] * Tp;
      c += a * R[mode.radial] * T;
      if (r > 1e-14) {
        cx += a * (cr * ct - cth * st / r);
        cy += a * (cr * st + cth * ct / r);
      } else {
        // At the origin only m = 1 modes have a nonzero gradient:
        // R(r) ~ R'(0) r, so grad(R T) -> R'(0) * (cos, sin) pattern.
        if (mode.m == 1) {
          double slope = R1[mode.radial];
          if (!mode.sine) {
            cx += a * slope;
          } else {
            cy += a * slope;
          }
        }
      }
    }
  }

  // Value, gradient and second partials at a point; used to fill field caches.
  PointSecond eval_second(const std::vector<double>& coeffs, double x, double y) const {
    check_coeffs(coeffs);
    PointSecond out;
    double r2 = x * x + y * y;
    double r0 = domain_.inner_radius;
    if (r2 >= r0 * r0) return out;
    double r = std::sqrt(r2);
    if (r < 1e-9) r = 1e-9;  // cache nodes never sit at the origin
    double theta = std::atan2(y, x);
    double ct = std::cos(theta), st = std::sin(theta);

    std::vector<double> R(radials_.size()), R1(radials_.size()), R2(radials_.size());
    for (std::size_t i = 0; i < radials_.size(); ++i) radials_[i].eval(r, R[i], R1[i], R2[i]);
    std::vector<double> cm(max_m_ + 1), sm(max_m_ + 1);
    angular_harmonics(theta, cm, sm);

    double inv_r = 1.0 / r;
    double inv_r2 = inv_r * inv_r;
    for (std::size_t j = 0; j < modes_.size(); ++j) {
      double a = coeffs[j];
      if (a == 0.0) continue;
      const BasisMode& mode = modes_[j];
      double m = mode.m;
      double T = mode.sine ? sm[mode.m] : cm[mode.m];
      double Tp = mode.sine ? m * cm[mode.m] : -m * sm[mode.m];
      double Tpp = -m * m * T;
      double cr = R1[mode.radial] * T;
      double crr = R2[mode.radial] * T;
      double cth = R[mode.radial] * Tp;
      double crth = R1[mode.radial] * Tp;
      double cthth = R[mode.radial] * Tpp;
      out.c += a * R[mode.radial] * T;
      out.cx += a * (cr * ct - cth * st * inv_r);
      out.cy += a * (cr * st + cth * ct * inv_r);
      out.cxx += a * (crr * ct * ct - 2.0 * crth * st * ct * inv_r + cthth * st * st * inv_r2 +
                      cr * st * st * inv_r + 2.0 * cth * st * ct * inv_r2);
      out.cyy += a * (crr * st * st + 2.0 * crth * st * ct * inv_r + cthth * ct * ct * inv_r2 +
                      cr * ct * ct * inv_r - 2.0 * cth * st * ct * inv_r2);
      out.cxy += a * (crr * st * ct + crth * (ct * ct - st * st) * inv_r -
                      cthth * st * ct * inv_r2 - cr * st * ct * inv_r -
                      cth * (ct * ct - st * st) * inv_r2);
    }
    return out;
  }

  // Single-mode point value (used by quadrature oracles).
  double mode_value(int j, double x, double y) const {
    std::vector<double> e(modes_.size(), 0.0);
    e[static_cast<std::size_t>(j)] = 1.0;
    double c, cx, cy;
    eval(e, x, y, c, cx, cy);
    return c;
  }

  // L2(Omega) norm of one mode via separable high-resolution 1D quadrature:
  // ||psi||^2 = (int_0^r0 R(r)^2 r dr) * (2*pi for m=0, pi otherwise).
  double mode_l2_norm(int j) const {
    const BasisMode& mode = modes_[static_cast<std::size_t>(j)];
    const RadialTable& tab = radials_[static_cast<std::size_t>(mode.radial)];
    // Composite Simpson on [0, r0] with many panels.
    int n = 20000;
    double h = domain_.inner_radius / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
      double r = i * h;
      double f = sqr(tab.value(r)) * r;
      double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      sum += w * f;
    }
    double radial = sum * h / 3.0;
    double angular = (mode.m == 0) ? kTwoPi : kPi;
    return std::sqrt(radial * angular);
  }

  void check_coeffs(const std::vector<double>& coeffs) const {
    if (coeffs.size() != modes_.size())
      throw ValidationError("coefficient count " + std::to_string(coeffs.size()) +
                            " does not match basis mode count " + std::to_string(modes_.size()));
  }

 private:
  void angular_harmonics(double theta, std::vector<double>& cm, std::vector<double>& sm) const {
    double c1 = std::cos(theta), s1 = std::sin(theta);
    cm[0] = 1.0;
    sm[0] = 0.0;
    if (max_m_ >= 1) {
      cm[1] = c1;
      sm[1] = s1;
    }
    for (int m = 2; m <= max_m_; ++m) {
      cm[m] = cm[m - 1] * c1 - sm[m - 1] * s1;
      sm[m] = sm[m - 1] * c1 + cm[m - 1] * s1;
    }
  }

  DomainSpec domain_;
  BumpCutoff bump_;
  std::vector<BasisMode> modes_;
  std::vector<RadialTable> radials_;
  int max_m_ = 0;
};

}  // namespace tomo
