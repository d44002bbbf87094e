#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "psamp/kernel.hpp"
#include "psamp/rational.hpp"
#include "psamp/transition_rule.hpp"

namespace psamp {

// Exact probability vector (weights sum to 1).
struct ExactDistribution {
  std::vector<Rational> w;
  bool operator==(const ExactDistribution&) const = default;
};

struct AcceptanceReport {
  Rational p_accept;
  // L(X_0 | accept); absent when p_accept = 0.
  std::optional<ExactDistribution> conditional_output;
  long outcome_count = 0;  // enumerated (trajectory x driver) atoms
};

enum class TrackerKind { FullTracking, MonotoneBounding };

struct OracleOptions {
  long cap = 10000000;  // enumeration size guard (EnumerationTooLarge)
  TrackerKind tracker = TrackerKind::FullTracking;
};

// Exact rational view of a kernel: matrix, stationary distribution, and time
// reversal. Double-only kernels are exactified entrywise (denominators up to
// 1e6); IrrationalEntries if any entry resists.
struct RationalChainView {
  int n = 0;
  std::vector<Rational> matrix;
  std::vector<Rational> pi;
  std::vector<Rational> reversed;
};

RationalChainView exact_chain_view(const DiscreteKernel& kernel);

// Ground truth for one rejection-sampling attempt: enumerates every backward
// trajectory from X_t = z weighted by the reversed kernel, crossed with
// every conditional driver assignment, and scores coalescence with the
// chosen tracker. Requires an enumerable rule (inverse-CDF rules enumerate
// through their finite segment partition).
AcceptanceReport exact_fill_report(const TransitionRule& rule, int t, State z,
                                   const OracleOptions& opts = {});

// P(detection within t) under unconditioned driver draws.
Rational exact_forward_coalescence(const TransitionRule& rule, int t,
                                   const OracleOptions& opts = {});

struct PiAverageReport {
  Rational lhs;                    // sum_z pi(z) p_accept(z)
  Rational rhs;                    // forward coalescence probability
  std::vector<Rational> per_state; // p_accept(z) per z
  bool equal = false;
};

PiAverageReport pi_average_check(const TransitionRule& rule, int t,
                                 const OracleOptions& opts = {});

// Joint law of (T, W) for the infinite-window sampler started from
// X_0 ~ pi, restricted to T <= t_max, plus the residual mass beyond.
struct JointTW {
  std::map<std::pair<int, State>, Rational> mass;
  Rational residual;
  std::vector<Rational> pi;

  std::map<int, Rational> t_marginal() const;
  std::map<State, Rational> w_marginal() const;
  // Exact check of P(T=t, W=w) = P(T=t) pi(w) over the enumerated block.
  bool factorizes() const;
};

JointTW exact_joint_T_W(const TransitionRule& rule, int t_max,
                        const OracleOptions& opts = {});

// Exact law of the CFTP backward coalescence time (smallest window width
// whose composition collapses), restricted to t_max with residual mass.
struct CftpTLaw {
  std::map<int, Rational> law;
  Rational residual;
};

CftpTLaw exact_cftp_t_law(const TransitionRule& rule, int t_max,
                          const OracleOptions& opts = {});

}  // namespace psamp
