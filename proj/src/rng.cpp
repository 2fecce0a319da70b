#include "flexfeed/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace flexfeed {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::substream(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t r = 0;
  do r = engine_();
  while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

int Rng::poisson(double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson: negative mean");
  if (mean == 0.0) return 0;
  const double limit = std::exp(-mean);
  int k = 0;
  double p = uniform();
  while (p > limit) {
    ++k;
    p *= uniform();
  }
  return k;
}

}  // namespace flexfeed
