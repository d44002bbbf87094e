#include "psamp/rng.hpp"

#include "psamp/errors.hpp"

namespace psamp {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream ^ 0x6a09e667f3bcc909ULL));
}

int RngStream::next_below(int n) {
  if (n <= 0) throw Error("BadArgument", "next_below requires n >= 1");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % un);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<int>(x % un);
}

int RngStream::sample_index(std::span<const double> weights) {
  const double u = next_unit();
  double cum = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0) last_positive = static_cast<int>(i);
    cum += weights[i];
    if (u < cum) return static_cast<int>(i);
  }
  if (last_positive < 0) throw Error("BadArgument", "sample_index over all-zero weights");
  return last_positive;
}

}  // namespace psamp
