#include "psamp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace psamp {

namespace {

constexpr double kEps = 1e-15;
constexpr int kMaxIter = 10000;

double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < kMaxIter; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_continued_fraction(double a, double x) {
  // Lentz's method on the standard continued fraction for Q.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

std::map<std::string, bool> rejection_levels(double p) {
  return {{"0.05", p < 0.05}, {"0.01", p < 0.01}, {"0.001", p < 0.001}};
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (!(a > 0) || x < 0) throw Error("BadArgument", "gamma Q needs a > 0, x >= 0");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_continued_fraction(a, x);
}

double chi_square_survival(double stat, double dof) {
  if (!(dof > 0)) throw Error("BadArgument", "dof must be positive");
  if (stat <= 0) return 1.0;
  return regularized_gamma_q(dof / 2.0, stat / 2.0);
}

GofReport chi_square_gof(std::span<const long> counts, const ProbabilityVector& expected) {
  if (counts.size() != static_cast<std::size_t>(expected.size()))
    throw Error("BadArgument", "counts and expected law disagree on length");

  GofReport report;
  for (long c : counts) {
    if (c < 0) throw Error("BadArgument", "counts must be nonnegative");
    report.total += c;
  }
  if (report.total < 5 * static_cast<long>(counts.size()))
    throw TooFewSamples("need at least 5 observations per cell on average");

  int live_cells = 0;
  bool impossible_mass = false;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double p = expected[static_cast<int>(i)];
    if (p <= 0) {
      if (counts[i] > 0) impossible_mass = true;
      continue;
    }
    ++live_cells;
    const double e = p * static_cast<double>(report.total);
    const double diff = static_cast<double>(counts[i]) - e;
    report.statistic += diff * diff / e;
  }
  if (live_cells < 2) throw TooFewSamples("need at least two cells with positive mass");
  report.dof = live_cells - 1;
  if (impossible_mass) {
    report.statistic = std::numeric_limits<double>::infinity();
    report.p_value = 0.0;
  } else {
    report.p_value = chi_square_survival(report.statistic, report.dof);
  }
  report.reject_at = rejection_levels(report.p_value);
  return report;
}

IndependenceReport independence_test(std::span<const std::pair<State, long>> pairs,
                                     int buckets) {
  if (buckets < 2) throw Error("BadArgument", "need at least two runtime buckets");
  if (pairs.size() < 10000)
    throw TooFewSamples("need at least 10000 pairs for the independence test");

  IndependenceReport report;

  std::vector<long> runtimes;
  runtimes.reserve(pairs.size());
  std::set<State> states;
  for (const auto& [value, runtime] : pairs) {
    runtimes.push_back(runtime);
    states.insert(value);
  }
  report.row_states.assign(states.begin(), states.end());
  if (report.row_states.size() < 2)
    throw TooFewSamples("all outputs are equal; independence is vacuous");

  // Empirical quantile boundaries, duplicates merged.
  std::sort(runtimes.begin(), runtimes.end());
  const std::size_t total = runtimes.size();
  for (int b = 1; b <= buckets; ++b) {
    const std::size_t at = total * static_cast<std::size_t>(b) / static_cast<std::size_t>(buckets);
    report.bucket_upper.push_back(runtimes[at - 1]);
  }
  report.bucket_upper.erase(std::unique(report.bucket_upper.begin(), report.bucket_upper.end()),
                            report.bucket_upper.end());
  if (report.bucket_upper.size() < 2)
    throw TooFewSamples("runtimes are too concentrated to bucket");

  const std::size_t rows = report.row_states.size();
  const std::size_t cols = report.bucket_upper.size();
  report.table.assign(rows, std::vector<long>(cols, 0));
  for (const auto& [value, runtime] : pairs) {
    const std::size_t r = static_cast<std::size_t>(
        std::lower_bound(report.row_states.begin(), report.row_states.end(), value) -
        report.row_states.begin());
    const std::size_t c = static_cast<std::size_t>(
        std::lower_bound(report.bucket_upper.begin(), report.bucket_upper.end(), runtime) -
        report.bucket_upper.begin());
    ++report.table[r][c];
  }

  std::vector<long> row_sum(rows, 0), col_sum(cols, 0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      row_sum[r] += report.table[r][c];
      col_sum[c] += report.table[r][c];
    }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double e = static_cast<double>(row_sum[r]) * static_cast<double>(col_sum[c]) /
                       static_cast<double>(total);
      const double diff = static_cast<double>(report.table[r][c]) - e;
      report.statistic += diff * diff / e;
    }
  report.dof = static_cast<double>((rows - 1) * (cols - 1));
  report.p_value = chi_square_survival(report.statistic, report.dof);
  report.reject_at = rejection_levels(report.p_value);
  return report;
}

IndependenceReport interruptibility_test(std::span<const RunRecord> records, int buckets) {
  std::vector<std::pair<State, long>> pairs;
  pairs.reserve(records.size());
  for (const RunRecord& rec : records)
    if (rec.accepted && rec.output)
      pairs.emplace_back(*rec.output, rec.cumulative_markov_steps);
  return independence_test(pairs, buckets);
}

}  // namespace psamp
