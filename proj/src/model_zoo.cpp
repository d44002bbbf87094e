#include "psamp/model_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace psamp {

namespace {

ChainModel assemble(StateSpace space, std::vector<Rational> matrix,
                    std::vector<Rational> weights, std::vector<std::vector<State>> maps) {
  ChainModel model;
  model.kernel = DiscreteKernel::build_exact(std::move(space), std::move(matrix));
  model.reversed = reverse_kernel(model.kernel);
  model.monotone_rule = make_table_rule(model.kernel, std::move(weights), std::move(maps));
  model.independent_rule = make_independent_transitions_rule(model.kernel);
  return model;
}

}  // namespace

ChainModel toy_chain() { return random_walk_chain(2); }

ChainModel random_walk_chain(int n) {
  if (n < 1) throw Error("BadArgument", "walk needs at least two states");
  const int m = n + 1;
  StateSpace space = make_ordered_state_space(m);
  const Rational half(1, 2);
  std::vector<Rational> matrix(static_cast<std::size_t>(m) * m, Rational(0));
  auto at = [&](State x, State y) -> Rational& {
    return matrix[static_cast<std::size_t>(x) * m + y];
  };
  for (State x = 0; x < m; ++x) {
    at(x, std::max(x - 1, 0)) += half;
    at(x, std::min(x + 1, n)) += half;
  }
  std::vector<State> down(static_cast<std::size_t>(m)), up(static_cast<std::size_t>(m));
  for (State x = 0; x < m; ++x) {
    down[static_cast<std::size_t>(x)] = std::max(x - 1, 0);
    up[static_cast<std::size_t>(x)] = std::min(x + 1, n);
  }
  return assemble(std::move(space), std::move(matrix), {half, half},
                  {std::move(down), std::move(up)});
}

// ---------------------------------------------------------------------------
// Arrangement ranking (factorial number system)

long factorial(int n) {
  if (n < 0 || n > 20) throw Error("BadArgument", "factorial argument out of range");
  long f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

std::vector<State> unrank_arrangement(int records, long rank) {
  if (records < 1 || rank < 0 || rank >= factorial(records))
    throw Error("BadArgument", "arrangement rank out of range");
  std::vector<State> pool(static_cast<std::size_t>(records));
  for (int i = 0; i < records; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::vector<State> out;
  out.reserve(static_cast<std::size_t>(records));
  long radix = factorial(records);
  for (int i = records; i >= 1; --i) {
    radix /= i;
    const long digit = rank / radix;
    rank %= radix;
    out.push_back(pool[static_cast<std::size_t>(digit)]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(digit));
  }
  return out;
}

long rank_arrangement(std::span<const State> arrangement) {
  const int k = static_cast<int>(arrangement.size());
  long rank = 0;
  for (int i = 0; i < k; ++i) {
    long smaller_later = 0;
    for (int j = i + 1; j < k; ++j)
      if (arrangement[static_cast<std::size_t>(j)] < arrangement[static_cast<std::size_t>(i)])
        ++smaller_later;
    rank = rank * (k - i) + smaller_later;
  }
  return rank;
}

// ---------------------------------------------------------------------------
// MtfRule

namespace {

std::vector<State> move_record_to_front(std::vector<State> arr, State record) {
  auto it = std::find(arr.begin(), arr.end(), record);
  std::rotate(arr.begin(), it, it + 1);
  return arr;
}

}  // namespace

MtfRule::MtfRule(int records, std::vector<double> request_weights)
    : records_(records), weights_(std::move(request_weights)) {
  if (records_ < 1 || records_ > 12)
    throw Error("BadArgument", "records must be between 1 and 12");
  if (weights_.size() != static_cast<std::size_t>(records_))
    throw BadWeights("need one request weight per record");
  double sum = 0.0;
  for (double w : weights_) {
    if (w <= 0.0) throw BadWeights("request weights must be positive");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-12) throw BadWeights("request weights must sum to 1");
  exact_weights_ = exactify_all(weights_);
  if (exact_weights_) {
    Rational exact_sum = 0;
    for (const Rational& w : *exact_weights_) exact_sum += w;
    if (exact_sum != 1) exact_weights_.reset();
  }
  space_ = make_state_space(static_cast<int>(factorial(records_)));
}

const DiscreteKernel& MtfRule::kernel() const {
  std::lock_guard<std::mutex> lock(kernel_mutex_);
  if (kernel_) return *kernel_;
  if (records_ > 6)
    throw EnumerationTooLarge("transition matrix over " + std::to_string(space_.n) +
                              " arrangements is not materialized");
  const int n = space_.n;
  // Stationary mass of an arrangement is the product over positions of the
  // record's weight divided by the suffix weight sum (front position first).
  if (exact_weights_) {
    std::vector<Rational> matrix(static_cast<std::size_t>(n) * n, Rational(0));
    std::vector<Rational> pi(static_cast<std::size_t>(n), Rational(1));
    for (State x = 0; x < n; ++x) {
      const auto arr = unrank_arrangement(records_, x);
      for (State j = 0; j < records_; ++j) {
        const State y = static_cast<State>(rank_arrangement(move_record_to_front(arr, j)));
        matrix[static_cast<std::size_t>(x) * n + y] += (*exact_weights_)[static_cast<std::size_t>(j)];
      }
      Rational suffix = 0;
      for (int i = records_ - 1; i >= 0; --i) {
        suffix += (*exact_weights_)[static_cast<std::size_t>(arr[static_cast<std::size_t>(i)])];
        pi[static_cast<std::size_t>(x)] *=
            (*exact_weights_)[static_cast<std::size_t>(arr[static_cast<std::size_t>(i)])] / suffix;
      }
    }
    kernel_ = DiscreteKernel::build_exact(space_, std::move(matrix), std::move(pi));
  } else {
    std::vector<double> matrix(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> pi(static_cast<std::size_t>(n), 1.0);
    for (State x = 0; x < n; ++x) {
      const auto arr = unrank_arrangement(records_, x);
      for (State j = 0; j < records_; ++j) {
        const State y = static_cast<State>(rank_arrangement(move_record_to_front(arr, j)));
        matrix[static_cast<std::size_t>(x) * n + y] += weights_[static_cast<std::size_t>(j)];
      }
      double suffix = 0.0;
      for (int i = records_ - 1; i >= 0; --i) {
        suffix += weights_[static_cast<std::size_t>(arr[static_cast<std::size_t>(i)])];
        pi[static_cast<std::size_t>(x)] *=
            weights_[static_cast<std::size_t>(arr[static_cast<std::size_t>(i)])] / suffix;
      }
    }
    kernel_ = DiscreteKernel::build(space_, std::move(matrix), std::move(pi));
  }
  return *kernel_;
}

State MtfRule::apply(State x, const Driver& u) const {
  check_state(x);
  const auto* atom = std::get_if<AtomDriver>(&u);
  if (!atom) throw DriverMismatch("move-to-front expects a requested-record driver");
  if (atom->index < 0 || atom->index >= records_)
    throw DriverMismatch("requested record out of range");
  return static_cast<State>(rank_arrangement(
      move_record_to_front(unrank_arrangement(records_, x), static_cast<State>(atom->index))));
}

Driver MtfRule::sample_driver(RngStream& rng) const {
  return AtomDriver{rng.sample_index(weights_)};
}

Driver MtfRule::impute_driver(State x_prev, State x_next, RngStream& rng) const {
  (void)rng;
  check_state(x_prev);
  check_state(x_next);
  // The request is pinned down by the transition: it is whatever record sits
  // at the front afterwards.
  const State requested = unrank_arrangement(records_, x_next)[0];
  if (apply(x_prev, AtomDriver{requested}) != x_next)
    throw ImpossibleTransition("arrangements are not one request apart");
  return AtomDriver{requested};
}

std::vector<WeightedDriver> MtfRule::enumerate_drivers() const {
  if (!exact_weights_)
    throw IrrationalEntries("request weights have no exact rational form");
  std::vector<WeightedDriver> out;
  out.reserve(static_cast<std::size_t>(records_));
  for (State j = 0; j < records_; ++j)
    out.push_back({AtomDriver{j}, (*exact_weights_)[static_cast<std::size_t>(j)]});
  return out;
}

std::vector<WeightedDriver> MtfRule::enumerate_conditional(State x_prev, State x_next) const {
  if (!exact_weights_)
    throw IrrationalEntries("request weights have no exact rational form");
  check_state(x_prev);
  check_state(x_next);
  const State requested = unrank_arrangement(records_, x_next)[0];
  if (apply(x_prev, AtomDriver{requested}) != x_next)
    throw ImpossibleTransition("arrangements are not one request apart");
  return {{AtomDriver{requested}, Rational(1)}};
}

// ---------------------------------------------------------------------------
// MtfDetectionProcess

DetectionState MtfDetectionProcess::initial() const {
  return StateSet(static_cast<std::size_t>(records_));
}

long MtfDetectionProcess::advance(DetectionState& d, const Driver& u) const {
  const auto* atom = std::get_if<AtomDriver>(&u);
  if (!atom) throw DriverMismatch("move-to-front detection expects a requested-record driver");
  std::get<StateSet>(d).set(static_cast<std::size_t>(atom->index));
  return 1;
}

bool MtfDetectionProcess::in_target(const DetectionState& d) const {
  // Once every record but at most one has been requested, the arrangement is
  // a function of the drivers alone: unrequested records sink to the back in
  // their original relative order, which a single record cannot disturb.
  return std::get<StateSet>(d).count() + 1 >= static_cast<std::size_t>(records_);
}

std::pair<std::shared_ptr<const MtfRule>, std::shared_ptr<const DetectionProcess>> mtf_process(
    std::vector<double> request_weights) {
  const int records = static_cast<int>(request_weights.size());
  auto rule = std::make_shared<const MtfRule>(records, std::move(request_weights));
  auto detector = std::make_shared<const MtfDetectionProcess>(records);
  return {std::move(rule), std::move(detector)};
}

}  // namespace psamp
