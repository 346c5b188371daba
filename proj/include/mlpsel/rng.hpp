#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace mlpsel {

// splitmix64 finalizer; bijective avalanche mixer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based seed derivation: collision-free in practice across the
// (master, n, r, ...) tuples used by the experiment harness, and stable
// across platforms and thread counts.
inline std::uint64_t seed_mix(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243F6A8885A308D3ull;  // pi fractional bits
  for (std::uint64_t v : parts) {
    h = mix64(h ^ mix64(v + 0x9E3779B97F4A7C15ull * h));
  }
  return h;
}

// Small deterministic generator (splitmix64 stream). We roll our own
// uniform/normal transforms instead of <random> distributions so that the
// byte-for-byte reproducibility contract does not depend on the standard
// library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1); never returns exactly 0 so log() stays finite.
  double uniform01() {
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; caches the second variate.
  double normal() {
    if (have_cache_) {
      have_cache_ = false;
      return cache_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    cache_ = r * std::sin(a);
    have_cache_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double cache_ = 0.0;
  bool have_cache_ = false;
};

}  // namespace mlpsel
