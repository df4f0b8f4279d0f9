#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace scoutsim {

// Seeded generator with fixed distribution algorithms. std::mt19937_64 is
// bit-reproducible everywhere, but the std <random> distributions are not,
// so the transforms live here. Episode replay depends on every consumer
// drawing from its own derived stream.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  /// Independent sub-stream keyed by (seed, stream label).
  static Rng derive(uint64_t seed, std::string_view stream) {
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (char c : stream) {
      h ^= static_cast<uint8_t>(c);
      h *= 1099511628211ull;
    }
    return Rng(splitmix64(seed ^ h));
  }

  uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n). Modulo bias is below 1e-13 for n < 2^20.
  uint32_t uniform_int(uint32_t n) {
    return n == 0 ? 0 : static_cast<uint32_t>(engine_() % n);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// One draw from N(0,1); consumes exactly two uniforms (Box-Muller, no cache).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Poisson(1) multiplicity by Knuth's product method.
  int poisson1() {
    const double limit = 0.36787944117144233;  // exp(-1)
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  static uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace scoutsim
