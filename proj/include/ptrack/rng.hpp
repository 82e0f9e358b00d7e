#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace ptrack {

// Deterministic per-environment RNG. All stochastic code in the library draws
// through this wrapper so that a seed fully pins a run, independent of
// standard-library distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t raw() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller (no cached state, deterministic).
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Uniform integer in [0, n).
  uint64_t index(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
    return engine_() % n;
  }

  // Child stream derived from this one; used to hand independent seeds to
  // parallel environments.
  uint64_t split() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ptrack
