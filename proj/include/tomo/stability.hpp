#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tomo/common.hpp"
#include "tomo/distance.hpp"
#include "tomo/quadrature.hpp"

namespace tomo {

// Empirical verification of the stability inequalities relating interior
// index differences to boundary distance data, on concrete field pairs.

struct StabilityReport {
  std::string inequality;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // lhs / rhs, 0 when both sides vanish
  int K = 0;
  std::uint64_t hash1 = 0, hash2 = 0;
  double lambda = 1.0, big_lambda = 1.0;
  double ell = 0.0, big_l = 0.0;

  static std::string csv_header() {
    return "inequality,lhs,rhs,ratio,K,hash1,hash2,lambda,big_lambda,ell,big_l";
  }

  std::string csv_row() const {
    return inequality + "," + fmt_g17(lhs) + "," + fmt_g17(rhs) + "," + fmt_g17(ratio) + "," +
           std::to_string(K) + "," + hex_u64(hash1) + "," + hex_u64(hash2) + "," +
           fmt_g17(lambda) + "," + fmt_g17(big_lambda) + "," + fmt_g17(ell) + "," +
           fmt_g17(big_l);
  }
};

namespace detail {

inline StabilityReport report_base(const DistanceTable& t1, const DistanceTable& t2,
                                   const ConformalField& f1, const ConformalField& f2) {
  if (t1.K() != t2.K()) throw ValidationError("stability check: table K mismatch");
  StabilityReport r;
  r.K = t1.K();
  r.hash1 = f1.hash();
  r.hash2 = f2.hash();
  r.lambda = std::min(f1.lambda(), f2.lambda());
  r.big_lambda = std::max(f1.big_lambda(), f2.big_lambda());
  return r;
}

inline double safe_ratio(double lhs, double rhs) {
  if (lhs == 0.0 && rhs == 0.0) return 0.0;
  return lhs / rhs;
}

}  // namespace detail

// Two-dimensional inverse stability: the interior L2 index difference is
// controlled by the boundary-derivative L2 norm of the distance difference
// with the explicit constant 1/sqrt(2 pi).
inline StabilityReport mukhometov_check(const DistanceTable& t1, const DistanceTable& t2,
                                        const ConformalField& f1, const ConformalField& f2,
                                        int quad_n = 256) {
  StabilityReport r = detail::report_base(t1, t2, f1, f2);
  r.inequality = "mukhometov";
  r.lhs = field_l2_diff(f1, f2, true, quad_n);
  r.rhs = dgamma_dxi_l2_diff(t1, t2) / std::sqrt(kTwoPi);
  r.ratio = detail::safe_ratio(r.lhs, r.rhs);
  return r;
}

// Forward direction: boundary distance differences are Lipschitz in the
// interior index difference. The constant is not explicit in the underlying
// estimate, so the report's ratio is the empirical constant against the
// core scaling Lambda^{m/2}/lambda (m = 2).
inline StabilityReport forward_check(const DistanceTable& t1, const DistanceTable& t2,
                                     const ConformalField& f1, const ConformalField& f2,
                                     int quad_n = 256) {
  StabilityReport r = detail::report_base(t1, t2, f1, f2);
  r.inequality = "forward";
  r.lhs = gamma_l2_diff(t1, t2);
  r.rhs = (r.big_lambda / r.lambda) * field_l2_diff(f1, f2, true, quad_n);
  r.ratio = detail::safe_ratio(r.lhs, r.rhs);
  return r;
}

// Log-distance level: empirical constants for the two directions
//   inverse:  ||c1 - c2||_{L2}  vs  ||Z1 - Z2||_{H1}
//   forward:  ||Z1 - Z2||_{L2}  vs  ||c1 - c2||_{L2}
inline std::pair<StabilityReport, StabilityReport> z_level_checks(const DistanceTable& t1,
                                                                  const DistanceTable& t2,
                                                                  const ConformalField& f1,
                                                                  const ConformalField& f2,
                                                                  int quad_n = 256) {
  double c_diff = field_l2_diff(f1, f2, false, quad_n);

  StabilityReport inv = detail::report_base(t1, t2, f1, f2);
  inv.inequality = "z_inverse";
  inv.lhs = c_diff;
  inv.rhs = z_h1_diff(t1, t2);
  inv.ratio = detail::safe_ratio(inv.lhs, inv.rhs);

  StabilityReport fwd = detail::report_base(t1, t2, f1, f2);
  fwd.inequality = "z_forward";
  fwd.lhs = z_l2_diff(t1, t2);
  fwd.rhs = c_diff;
  fwd.ratio = detail::safe_ratio(fwd.lhs, fwd.rhs);

  return {inv, fwd};
}

// Append reports to a CSV ledger, writing the header when the file is new.
inline void append_reports(const std::filesystem::path& path,
                           const std::vector<StabilityReport>& reports) {
  bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw ValidationError("cannot open stability ledger: " + path.string());
  if (fresh) out << StabilityReport::csv_header() << "\n";
  for (const auto& r : reports) out << r.csv_row() << "\n";
}

// Triangle inequality on boundary triples, a direct metric-space property of
// the distance function.
inline double triangle_violation(const DistanceTable& t, int i, int j, int k) {
  return t.gamma(i, k) - (t.gamma(i, j) + t.gamma(j, k));
}

}  // namespace tomo
