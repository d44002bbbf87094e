#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "psamp/coalescence.hpp"
#include "psamp/errors.hpp"
#include "psamp/kernel.hpp"
#include "psamp/transition_rule.hpp"

namespace psamp {

// Terminal seed for the backward pass: a fixed state or a distribution, in
// either case required to live on states of positive stationary mass.
struct SeedSpec {
  std::variant<State, ProbabilityVector> v;

  static SeedSpec fixed(State z) { return {z}; }
  static SeedSpec distribution(ProbabilityVector p) { return {std::move(p)}; }
};

enum class RetryPolicy { FixedT, Doubling };

struct FillConfig {
  int horizon = 1;  // t for the first attempt
  SeedSpec seed = SeedSpec::fixed(0);
  RetryPolicy retry = RetryPolicy::Doubling;
  int max_attempts = 30;
  std::uint64_t rng_seed = 0;
};

struct RunRecord {
  int attempt_index = 0;
  int horizon = 0;
  bool accepted = false;
  std::optional<State> output;       // X_0 on acceptance
  std::vector<State> trajectory;     // X_0 ... X_t
  std::vector<Driver> drivers;       // drivers[s-1] carries X_{s-1} to X_s
  long markov_steps = 0;             // backward steps + detection work
  long cumulative_markov_steps = 0;  // summed over attempts within one sample
  std::optional<int> first_hit;
};

class MaxAttemptsExceeded : public Error {
public:
  MaxAttemptsExceeded(const std::string& message, std::vector<RunRecord> log)
      : Error("MaxAttemptsExceeded", message), attempts(std::move(log)) {}
  std::vector<RunRecord> attempts;
};

// One rejection-sampling attempt at horizon t: draw X_t from the seed, run
// the reversed chain down to X_0, impute the drivers conditionally on the
// trajectory, and accept iff the detection process certifies coalescence
// within the window.
RunRecord fill_attempt(const TransitionRule& rule, const ReversedKernel& rev,
                       const DetectionProcess& tracker, int t, const SeedSpec& seed,
                       RngStream& rng);

struct FillResult {
  State output = 0;
  std::vector<RunRecord> attempts;
};

// Retries fill_attempt under the configured policy, each attempt on its own
// rng stream derived from (rng_seed, attempt_index). Doubled horizons are
// clamped at 2^20. Throws MaxAttemptsExceeded (carrying the attempt log)
// when the budget runs out.
FillResult fill_sample(const TransitionRule& rule, const ReversedKernel& rev,
                       const DetectionProcess& tracker, const FillConfig& config);

struct CurvePoint {
  double c = 0;
  int t = 0;
  long accepted = 0;
  long replications = 0;
  double p_hat = 0;
  double std_error = 0;
};

// Single-attempt acceptance estimates on the (n+1)-state reflecting walk
// with the monotone two-atom rule, z = 0, t = ceil(c * n^2) per grid point.
std::vector<CurvePoint> acceptance_curve(int n, std::span<const double> c_grid,
                                         long replications, std::uint64_t seed);

}  // namespace psamp
