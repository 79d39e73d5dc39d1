#ifndef LONET_RNG_HPP
#define LONET_RNG_HPP

#include <cstdint>
#include <random>

namespace lonet {

/// Seeded PRNG for deterministic simulation.
///
/// The uniform and Gaussian transforms are implemented explicitly (instead of
/// going through std::*_distribution, whose output sequence is
/// implementation-defined) so that a given seed reproduces byte-identical
/// measurement data everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double gaussian(double mean, double sigma) {
    return mean + sigma * gaussian();
  }

  std::uint64_t raw() { return engine_(); }

  /// Derives an independent sub-seed for a named stream (stage, series index,
  /// ...) from a base seed. splitmix64 finalizer; deterministic.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lonet

#endif
