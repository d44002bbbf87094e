#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psamp/fill.hpp"
#include "psamp/kernel.hpp"

namespace psamp {

// Upper regularized incomplete gamma Q(a, x), by series for x < a+1 and by
// continued fraction beyond; absolute accuracy ~1e-10.
double regularized_gamma_q(double a, double x);

// P(X > stat) for X ~ chi-square(dof).
double chi_square_survival(double stat, double dof);

struct GofReport {
  double statistic = 0;
  double dof = 0;
  double p_value = 1;
  long total = 0;
  std::map<std::string, bool> reject_at;  // keys "0.05", "0.01", "0.001"
};

// Pearson goodness-of-fit of observed counts against an expected law.
// Requires total >= 5 * n (TooFewSamples). Zero-probability cells drop from
// the dof; observing mass there forces p = 0.
GofReport chi_square_gof(std::span<const long> counts, const ProbabilityVector& expected);

struct IndependenceReport {
  std::vector<State> row_states;          // observed output states, sorted
  std::vector<long> bucket_upper;         // inclusive upper runtime bounds
  std::vector<std::vector<long>> table;   // rows: states, cols: buckets
  double statistic = 0;
  double dof = 0;
  double p_value = 1;
  std::map<std::string, bool> reject_at;
};

// Chi-square independence of (value, runtime) with runtimes bucketed by
// empirical quantiles (duplicate boundaries merge). Requires >= 10^4 pairs
// and at least two distinct buckets and values (TooFewSamples).
IndependenceReport independence_test(std::span<const std::pair<State, long>> pairs,
                                     int buckets = 4);

// Output state vs cumulative Markov steps over successful sampler records.
// Interruptibility holds when this does not reject; the same test applied to
// CFTP output vs window width is the designed counterexample.
IndependenceReport interruptibility_test(std::span<const RunRecord> records, int buckets = 4);

}  // namespace psamp
