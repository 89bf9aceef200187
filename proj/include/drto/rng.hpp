#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace drto {

// Deterministic random source. Every stochastic piece of the simulator draws
// from one of these, so a (config, seed) pair fixes all emitted numbers.
// Distribution transforms are inlined here instead of using
// std::*_distribution, whose sequences differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unit-mean exponential, strictly positive.
  double exponential() { return -std::log(uniform_open()); }

  /// Standard normal (Box-Muller, one spare cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * kPi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform index in [0, n); n must be positive.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  static constexpr double kPi = 3.14159265358979323846264338327950288;

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stateless mix for deriving independent stream seeds from one master seed
// (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace drto
