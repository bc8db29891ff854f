#pragma once

#include <cmath>

#include "tomo/common.hpp"
#include "tomo/field.hpp"

namespace tomo {

// Midpoint-rule integration over the unit disk on an n x n Cartesian grid.
// The integrands of interest (powers of c or n differences) are smooth and
// compactly supported in the inner disk, where the midpoint rule converges
// superalgebraically; the disk mask only trims cells that are identically
// zero for such integrands.
template <typename F>
double disk_integral(F&& f, int n = 256) {
  double h = 2.0 / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double y = -1.0 + (i + 0.5) * h;
    for (int j = 0; j < n; ++j) {
      double x = -1.0 + (j + 0.5) * h;
      if (x * x + y * y > 1.0) continue;
      acc += f(Vec2{x, y});
    }
  }
  return acc * h * h;
}

// L2(disk) distance between two conformal fields, of the factors n = e^c or
// of the exponents c.
inline double field_l2_diff(const ConformalField& a, const ConformalField& b, bool of_n = true,
                            int n = 256) {
  double v = disk_integral(
      [&](const Vec2& x) {
        if (of_n) return sqr(a.eval(x).n - b.eval(x).n);
        return sqr(a.eval(x).c - b.eval(x).c);
      },
      n);
  return std::sqrt(std::max(0.0, v));
}

inline double field_l2_norm(const ConformalField& a, bool of_n = false, int n = 256) {
  double v = disk_integral(
      [&](const Vec2& x) {
        if (of_n) return sqr(a.eval(x).n - 1.0);
        return sqr(a.eval(x).c);
      },
      n);
  return std::sqrt(std::max(0.0, v));
}

}  // namespace tomo
