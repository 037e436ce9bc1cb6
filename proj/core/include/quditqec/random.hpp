#pragma once

// Versioned random streams. Changing anything here changes every ensemble,
// so bump kRngVersion alongside.

#include <cstdint>
#include <cmath>
#include <random>

namespace quditqec {

inline constexpr int kRngVersion = 1;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of configuration `index` in an ensemble.
inline std::uint64_t configuration_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(master_seed + index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // std::uniform_real_distribution is implementation-defined; this is not.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace quditqec
