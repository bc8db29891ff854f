#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tomo {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

// ============================================================================
// Error types
// ============================================================================

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonSimpleError : std::runtime_error {
  explicit NonSimpleError(const std::string& msg) : std::runtime_error(msg) {}
};

// ============================================================================
// Small vector algebra
// ============================================================================

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
};

inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm2(const Vec2& a) { return a.x * a.x + a.y * a.y; }
inline double norm(const Vec2& a) { return std::sqrt(norm2(a)); }
inline Vec2 normalized(const Vec2& a) {
  double n = norm(a);
  return {a.x / n, a.y / n};
}
// Counterclockwise quarter turn.
inline Vec2 rot90(const Vec2& a) { return {-a.y, a.x}; }
inline Vec2 from_angle(double t) { return {std::cos(t), std::sin(t)}; }

struct Mat2 {
  // Row-major: [a b; c d].
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  Vec2 apply(const Vec2& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  double det() const { return a * d - b * c; }
};

// Singular values of a 2x2 matrix, descending.
inline void singular_values(const Mat2& m, double& smax, double& smin) {
  double e = (m.a + m.d) * 0.5;
  double f = (m.a - m.d) * 0.5;
  double g = (m.c + m.b) * 0.5;
  double h = (m.c - m.b) * 0.5;
  double q = std::sqrt(e * e + h * h);
  double r = std::sqrt(f * f + g * g);
  smax = q + r;
  smin = std::fabs(q - r);
}

// ============================================================================
// Angle helpers
// ============================================================================

// Wrap to [0, 2*pi).
inline double wrap_angle(double t) {
  t = std::fmod(t, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}

// Signed difference a-b wrapped to (-pi, pi].
inline double angle_diff(double a, double b) {
  double d = std::fmod(a - b, kTwoPi);
  if (d <= -kPi) d += kTwoPi;
  if (d > kPi) d -= kTwoPi;
  return d;
}

// Euclidean chord length between unit-circle points at angles a, b.
inline double chord_length(double a, double b) {
  return 2.0 * std::fabs(std::sin(0.5 * (a - b)));
}

inline double sqr(double x) { return x * x; }

// ============================================================================
// Hashing (FNV-1a over raw bytes), used to fingerprint fields and tables
// ============================================================================

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex_u64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

// Full-precision decimal formatting for deterministic text output.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace tomo
