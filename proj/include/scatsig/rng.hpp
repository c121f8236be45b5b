#pragma once

// Counter-based generator: value(seed, counter) is SplitMix64's output
// function applied to seed + (counter + 1) * golden_gamma. Any stream
// position can be reproduced without replaying earlier draws, which keeps
// parallel consumers deterministic.

#include <cmath>
#include <cstdint>

namespace scatsig::rng {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t value(std::uint64_t seed, std::uint64_t counter) {
  return mix64(seed + (counter + 1) * kGoldenGamma);
}

// Uniform double in [0, 1) with 53 random bits.
constexpr double uniform01(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>(value(seed, counter) >> 11) * 0x1.0p-53;
}

// Uniform double in [-1, 1).
constexpr double uniform_pm1(std::uint64_t seed, std::uint64_t counter) {
  return 2.0 * uniform01(seed, counter) - 1.0;
}

// Sequential view over the counter stream.
class Stream {
 public:
  explicit Stream(std::uint64_t seed, std::uint64_t start = 0) : seed_(seed), counter_(start) {}
  double uniform01() { return rng::uniform01(seed_, counter_++); }
  double uniform_pm1() { return rng::uniform_pm1(seed_, counter_++); }
  // Standard normal via Box-Muller (two draws per call).
  double normal() {
    const double u1 = 1.0 - uniform01();  // in (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace scatsig::rng
