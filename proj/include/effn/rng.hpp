#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace effn {

// Deterministic random numbers for the whole toolkit.
//
// Generator: xoshiro256** seeded through SplitMix64. Seed-derivation rule:
// a stream for substream (a, b) of a base seed s is
//   Rng(mix(mix(s, a), b))
// where mix(x, y) = splitmix64(x ^ (y + 0x9e3779b97f4a7c15)). Every
// stochastic operation takes an explicit Rng (or a seed it derives from),
// so runs replay bit-identically from the base seed.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t x, std::uint64_t y) {
  return splitmix64(x ^ (y + 0x9e3779b97f4a7c15ull));
}

// FNV-1a, used to give string trial ids a stable substream id.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : state_) {
      x = splitmix64(x);
      w = x;
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Plain modulo; bias is negligible for the
  // desk-scale ranges used here and the rule stays trivially replayable.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Standard normal via Box-Muller; the pair's second value is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
  double cached_ = 0.0;
  bool have_cached_ = false;
};

inline Rng derive_rng(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return Rng(mix_seed(mix_seed(base, a), b));
}

}  // namespace effn
