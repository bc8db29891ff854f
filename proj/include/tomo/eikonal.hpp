#pragma once

#include <cmath>
#include <queue>
#include <vector>

#include "tomo/common.hpp"
#include "tomo/field.hpp"

namespace tomo {

// Grid eikonal solver |grad d| = n for distances from one boundary source,
// used as an independent cross-check of the shooting BVP. The grid extends a
// few cells beyond the unit disk with n = 1 there; for a simple metric the
// boundary distance never exceeds the boundary arc between the endpoints, so
// admitting paths through that rim cannot undercut the true distance, and it
// frees the update stencil from domain-boundary special cases.

struct EikonalOptions {
  double h = 1.0 / 256;
  int order = 2;        // upwind order, 1 or 2
  int margin_cells = 3; // rim width beyond the unit circle

  void validate() const {
    if (!(h > 0) || h > 0.05) throw ValidationError("eikonal h must be in (0, 0.05]");
    if (order != 1 && order != 2) throw ValidationError("eikonal order must be 1 or 2");
    if (margin_cells < 2) throw ValidationError("eikonal margin must be >= 2 cells");
  }
};

class EikonalResult {
 public:
  EikonalResult(int m, double h) : m_(m), h_(h), half_(0.5 * h * (m - 1)) {
    d_.assign(static_cast<std::size_t>(m) * m, std::numeric_limits<double>::infinity());
  }

  int m() const { return m_; }
  double h() const { return h_; }
  double node_x(int j) const { return -half_ + j * h_; }
  double node_y(int i) const { return -half_ + i * h_; }
  double& at(int i, int j) { return d_[static_cast<std::size_t>(i) * m_ + j]; }
  double at(int i, int j) const { return d_[static_cast<std::size_t>(i) * m_ + j]; }

  // Values in the order the marching accepted them (seeds excluded).
  std::vector<double> accept_trace;

  // Bilinear value at an arbitrary point inside the grid.
  double interp(const Vec2& x) const {
    double gx = (x.x + half_) / h_;
    double gy = (x.y + half_) / h_;
    int j = static_cast<int>(std::floor(gx));
    int i = static_cast<int>(std::floor(gy));
    if (i < 0 || j < 0 || i >= m_ - 1 || j >= m_ - 1)
      throw DomainError("eikonal interpolation outside grid");
    double fx = gx - j, fy = gy - i;
    return (1 - fy) * ((1 - fx) * at(i, j) + fx * at(i, j + 1)) +
           fy * ((1 - fx) * at(i + 1, j) + fx * at(i + 1, j + 1));
  }

 private:
  int m_;
  double h_, half_;
  std::vector<double> d_;
};

namespace detail {

struct HeapEntry {
  double d;
  int idx;
  bool operator>(const HeapEntry& o) const { return d > o.d; }
};

}  // namespace detail

inline EikonalResult eikonal_solve(const ConformalField& field, double theta_source,
                                   const EikonalOptions& opts = {}) {
  opts.validate();
  double h = opts.h;
  double reach = 1.0 + opts.margin_cells * h;
  int half_cells = static_cast<int>(std::ceil(reach / h));
  int m = 2 * half_cells + 1;
  EikonalResult res(m, h);

  // Refractive index at nodes: 1 outside the closed disk (and throughout the
  // collar), the cached field inside.
  std::vector<double> nn(static_cast<std::size_t>(m) * m, 1.0);
  double r0 = field.domain().inner_radius;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      Vec2 x{res.node_x(j), res.node_y(i)};
      if (norm2(x) < r0 * r0) nn[static_cast<std::size_t>(i) * m + j] = field.eval(x).n;
    }

  Vec2 src = from_angle(theta_source);

  // Exact initialization on a ball where the straight segment provably
  // realizes the distance: the ball sits in the n = 1 region, and any
  // competitor leaving it is longer even at the global minimum index.
  double lam = field.lambda();
  double rho = 0.9 * field.domain().boundary_gap() * (2.0 * lam / (1.0 + lam));

  std::vector<std::uint8_t> accepted(static_cast<std::size_t>(m) * m, 0);
  std::priority_queue<detail::HeapEntry, std::vector<detail::HeapEntry>, std::greater<>> heap;

  // Seed values are exact and final: mark them accepted outright so no
  // approximate update can ever overwrite them.
  int jc = static_cast<int>(std::round((src.x + 0.5 * h * (m - 1)) / h));
  int ic = static_cast<int>(std::round((src.y + 0.5 * h * (m - 1)) / h));
  int ball = static_cast<int>(std::ceil(rho / h)) + 1;
  std::vector<int> seeds;
  for (int i = std::max(0, ic - ball); i <= std::min(m - 1, ic + ball); ++i)
    for (int j = std::max(0, jc - ball); j <= std::min(m - 1, jc + ball); ++j) {
      Vec2 x{res.node_x(j), res.node_y(i)};
      double dist = norm(x - src);
      if (dist <= rho) {
        res.at(i, j) = dist;
        accepted[static_cast<std::size_t>(i) * m + j] = 1;
        seeds.push_back(i * m + j);
      }
    }
  if (seeds.empty()) throw SolverError("eikonal source ball contains no grid node");

  auto update = [&](int i, int j) {
    if (accepted[static_cast<std::size_t>(i) * m + j]) return;
    double nij = nn[static_cast<std::size_t>(i) * m + j];
    double alpha[2] = {0, 0}, beta[2] = {0, 0};
    double dmin[2] = {std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};
    int used = 0;
    for (int axis = 0; axis < 2; ++axis) {
      int di = axis == 0 ? 0 : 1;
      int dj = axis == 0 ? 1 : 0;
      for (int s = -1; s <= 1; s += 2) {
        int i1 = i + s * di, j1 = j + s * dj;
        if (i1 < 0 || j1 < 0 || i1 >= m || j1 >= m) continue;
        if (!accepted[static_cast<std::size_t>(i1) * m + j1]) continue;
        double d1 = res.at(i1, j1);
        if (d1 >= dmin[axis]) continue;
        dmin[axis] = d1;
        int i2 = i + 2 * s * di, j2 = j + 2 * s * dj;
        bool second = opts.order == 2 && i2 >= 0 && j2 >= 0 && i2 < m && j2 < m &&
                      accepted[static_cast<std::size_t>(i2) * m + j2] &&
                      res.at(i2, j2) <= d1;
        if (second) {
          alpha[axis] = 1.5 / h;
          beta[axis] = (2.0 * d1 - 0.5 * res.at(i2, j2)) / h;
        } else {
          alpha[axis] = 1.0 / h;
          beta[axis] = d1 / h;
        }
      }
      if (std::isfinite(dmin[axis])) ++used;
    }
    if (used == 0) return;

    auto solve2 = [&](double a0, double b0, double a1, double b1) {
      double A = a0 * a0 + a1 * a1;
      double B = a0 * b0 + a1 * b1;
      double C = b0 * b0 + b1 * b1 - nij * nij;
      double disc = B * B - A * C;
      if (disc < 0) return std::numeric_limits<double>::infinity();
      return (B + std::sqrt(disc)) / A;
    };

    double cand = std::numeric_limits<double>::infinity();
    if (std::isfinite(dmin[0]) && std::isfinite(dmin[1])) {
      cand = solve2(alpha[0], beta[0], alpha[1], beta[1]);
      if (!(cand >= std::max(dmin[0], dmin[1]))) {
        // second-order stencil unusable here, retry first order
        cand = solve2(1.0 / h, dmin[0] / h, 1.0 / h, dmin[1] / h);
      }
      if (!(cand >= std::max(dmin[0], dmin[1])))
        cand = std::min(dmin[0], dmin[1]) + h * nij;  // causal single-axis fallback
    } else {
      int axis = std::isfinite(dmin[0]) ? 0 : 1;
      double a = alpha[axis], b = beta[axis];
      cand = b / a + nij / a;
      if (!(cand >= dmin[axis])) cand = dmin[axis] + h * nij;
    }
    if (cand < res.at(i, j)) {
      res.at(i, j) = cand;
      heap.push({cand, i * m + j});
    }
  };

  for (int idx : seeds) {
    int i = idx / m, j = idx % m;
    if (i > 0) update(i - 1, j);
    if (i < m - 1) update(i + 1, j);
    if (j > 0) update(i, j - 1);
    if (j < m - 1) update(i, j + 1);
  }

  while (!heap.empty()) {
    auto [d, idx] = heap.top();
    heap.pop();
    int i = idx / m, j = idx % m;
    if (accepted[idx]) continue;
    if (d > res.at(i, j)) continue;  // stale entry
    accepted[idx] = 1;
    res.accept_trace.push_back(d);
    if (i > 0) update(i - 1, j);
    if (i < m - 1) update(i + 1, j);
    if (j > 0) update(i, j - 1);
    if (j < m - 1) update(i, j + 1);
  }
  return res;
}

// Boundary distances from one source angle to a uniform grid of target
// angles, restricted from the grid solution by bilinear interpolation.
inline std::vector<double> eikonal_boundary_row(const ConformalField& field, double theta_source,
                                                int K, const EikonalOptions& opts = {}) {
  EikonalResult res = eikonal_solve(field, theta_source, opts);
  std::vector<double> out(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) out[k] = res.interp(from_angle(kTwoPi * k / K));
  return out;
}

}  // namespace tomo
