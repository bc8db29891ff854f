#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "tomo/common.hpp"

namespace tomo {

// Deterministic seeded RNG. xoshiro256** generator with splitmix64 seeding,
// plus a stable stream-derivation rule so that independent components
// (prior draws, datasets, chains, proposals) each get their own stream from
// one master seed. No wall-clock anywhere.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream() : RngStream(0) {}

  explicit RngStream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (int i = 0; i < 4; ++i) s_[i] = splitmix64(sm);
  }

  // Stable derivation of a child stream: mixes the master seed with a tag.
  static RngStream derive(std::uint64_t master, std::uint64_t tag) {
    std::uint64_t sm = master;
    std::uint64_t a = splitmix64(sm);
    std::uint64_t sm2 = tag ^ 0xd1b54a32d192ed03ull;
    std::uint64_t b = splitmix64(sm2);
    return RngStream(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
  }

  static RngStream derive(std::uint64_t master, std::uint64_t tag1, std::uint64_t tag2) {
    RngStream first = derive(master, tag1);
    return derive(first.next_u64(), tag2);
  }

  // Named streams: the tag string is hashed (FNV-1a) into a numeric tag so
  // call sites can say derive(seed, "chain", c) without a registry of ids.
  static std::uint64_t tag_hash(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char ch : tag) {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ull;
    }
    return h;
  }

  static RngStream derive(std::uint64_t master, std::string_view tag) {
    return derive(master, tag_hash(tag));
  }

  static RngStream derive(std::uint64_t master, std::string_view tag, std::uint64_t index) {
    return derive(master, tag_hash(tag), index);
  }

  std::uint64_t next_u64() {
    std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller; caches the spare value.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = kTwoPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection to kill modulo bias.
    std::uint64_t limit = ~0ull - (~0ull % n);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4] = {1, 2, 3, 4};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tomo
