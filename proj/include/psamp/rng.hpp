#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace psamp {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t z);

// Deterministic seed derivation for (seed, stream) pairs. Replications and
// retry attempts each get their own stream so runs are reproducible and
// order-independent.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded generator with platform-independent output. Uniform doubles are
// built from the top 53 bits of the raw draw rather than going through
// std::uniform_real_distribution, which the standard leaves unspecified.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : gen_(derive_seed(seed, stream)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Unbiased uniform draw from {0, ..., n-1}.
  int next_below(int n);

  // Samples an index proportional to `weights` (assumed to sum to ~1).
  // Floating-point shortfall at the top end lands on the last positive entry.
  int sample_index(std::span<const double> weights);

private:
  std::mt19937_64 gen_;
};

}  // namespace psamp
