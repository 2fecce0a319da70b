#pragma once

#include <cstdint>
#include <random>

namespace flexfeed {

/// Seeded generator with platform-independent draws. std distributions are
/// implementation-defined, so uniform/Poisson draws are done by hand here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream `index` of `seed` (one per Monte Carlo trajectory).
  static Rng substream(std::uint64_t seed, std::uint64_t index);

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Knuth's product method; fine for the small rates used here.
  int poisson(double mean);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace flexfeed
