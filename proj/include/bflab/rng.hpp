#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace bflab {

// splitmix64 finalizer; the standard strong 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stream seed for replicate `idx` of a named experiment under `master`.
// Streams for distinct (master, name, idx) are statistically independent.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t name_hash,
                                 std::uint64_t idx) {
  return mix64(mix64(mix64(master) ^ name_hash) ^ idx);
}

// Deterministic, bit-portable generator. mt19937_64 is pinned by the standard
// and the gaussian/uniform conversions below avoid the implementation-defined
// std::*_distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // Uniform on (0, 1]; never returns 0 so log() is safe.
  double u01() {
    return double((eng_() >> 11) + 1) * 0x1.0p-53;
  }

  double sign() { return (eng_() >> 63) ? 1.0 : -1.0; }

  // Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller, second value cached.
  double gaussian() {
    if (have_cache_) {
      have_cache_ = false;
      return cache_;
    }
    const double u1 = u01();
    const double u2 = u01();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    cache_ = rad * std::sin(ang);
    have_cache_ = true;
    return rad * std::cos(ang);
  }

 private:
  std::mt19937_64 eng_;
  double cache_ = 0.0;
  bool have_cache_ = false;
};

}  // namespace bflab
