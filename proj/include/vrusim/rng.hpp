#pragma once

#include <cmath>
#include <cstdint>

// Counter-based deterministic RNG. Every random draw in the simulator is a
// pure function of (scenario seed, stream tag, identifying indices), so runs
// replay bit-identically regardless of evaluation order or thread count.
// std::<random> distributions are implementation-defined and are avoided.

namespace vrusim {

inline constexpr std::uint64_t kStreamNoise   = 0x6e6f697365ULL;   // state observation
inline constexpr std::uint64_t kStreamLatency = 0x6c6174ULL;       // hop sampling
inline constexpr std::uint64_t kStreamLayout  = 0x6c61796f7574ULL; // scenario generation

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(a, b), c);
}

constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                            std::uint64_t d) {
  return mix(mix(a, b, c), d);
}

// Sequential generator over a fixed key; cheap to construct per draw site.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return splitmix64(key_ + (++ctr_) * 0x9e3779b97f4a7c15ULL); }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Box-Muller; one normal per call (the pair's second half is discarded to
  // keep draw counts position-independent).
  double next_normal() {
    double u1 = next_unit();
    double u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

} // namespace vrusim
