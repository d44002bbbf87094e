#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "psamp/coalescence.hpp"
#include "psamp/fill.hpp"
#include "psamp/rational.hpp"

namespace psamp {

// Drivers assigned to negative time indices; by_depth[d] is the driver at
// time -d (so depth 0 drives the final step into time 0). Append-only: once
// a depth has its driver, widening the window never resamples it.
struct DriverLog {
  std::vector<Driver> by_depth;
};

enum class CheckPolicy { EveryStep, PowersOfTwo };

struct BackwardRun {
  std::int64_t T = 0;               // window width at which detection succeeded
  State output = 0;                 // coalesced value at time 0
  std::optional<State> W;           // X_{-T}, the reported observation of the
                                    // infinite-window variant
  std::vector<State> trajectory;    // reversed path X_0, X_{-1}, ..., X_{-T}
  long chain_steps = 0;
  DriverLog log;
};

// Coupling from the past over windows 1, 2, 4, ... up to window_cap
// (WindowLimitExceeded beyond). Drivers are reused across windows via the
// log; each window reruns the detection process from scratch and, on
// detection, the output is recovered by replaying the window forward.
BackwardRun cftp_sample(const TransitionRule& rule, const DetectionProcess& tracker,
                        RngStream& rng, std::int64_t window_cap = std::int64_t(1) << 20);

// Infinite-time-window variant of the rejection sampler: start X_0 from the
// seed, extend the reversed chain backward, impute drivers along the way,
// and stop at the first candidate window T whose imputed drivers certify
// coalescence; the reported sample is W = X_{-T}. Candidates follow the
// check policy (every step, or powers of two); T = 0 covers the degenerate
// one-state case.
BackwardRun fill_infinite_window(const TransitionRule& rule, const ReversedKernel& rev,
                                 const DetectionProcess& tracker, const SeedSpec& seed,
                                 CheckPolicy policy, RngStream& rng,
                                 std::int64_t window_cap = std::int64_t(1) << 20);

struct PiAverageRow {
  int t = 0;
  Rational lhs;  // sum_z pi(z) * P_z(accept at horizon t)
  Rational rhs;  // P(forward coalescence within t)
  bool equal = false;
};

// Exact diagnostic tying the rejection sampler to CFTP: the pi-averaged
// acceptance identity per horizon, the factorization of the joint (T, W)
// law, and the match between the backward coalescence-time laws of the
// infinite-window variant and CFTP.
struct ConnectionReport {
  std::vector<PiAverageRow> pi_average;          // t = 0 .. t_max
  bool joint_factorizes = false;                 // P(T=t, W=w) = P(T=t) pi(w)
  bool t_law_matches = false;
  std::map<int, Rational> t_law;                 // common backward T law
  Rational residual;                             // mass with T > t_max

  bool all_ok() const;
};

ConnectionReport connection_diagnostic(const TransitionRule& rule, int t_max);

}  // namespace psamp
