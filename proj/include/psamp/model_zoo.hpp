#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "psamp/coalescence.hpp"
#include "psamp/kernel.hpp"
#include "psamp/transition_rule.hpp"

namespace psamp {

// A chain fixture bundled with its reversal and update rules.
struct ChainModel {
  DiscreteKernel kernel;
  ReversedKernel reversed;
  std::shared_ptr<const TableRule> monotone_rule;
  std::shared_ptr<const TransitionRule> independent_rule;
};

// Three-state chain: from 0 move to {0,1}, from 1 to {0,2}, from 2 to {1,2},
// each with probability 1/2. Uniform stationary law; self-reversed. The
// monotone rule has two atoms, 0,1,2 -> 0,0,1 and 0,1,2 -> 1,2,2.
ChainModel toy_chain();

// Reflecting +-1 walk on {0..n}, holding in place at the boundary with
// probability 1/2. Uniform stationary law. Monotone atoms: everything down
// (floored at 0) or everything up (capped at n).
ChainModel random_walk_chain(int n);

// Move-to-front over arrangements of `records` items; the driver is the
// requested record, moved to the front of the list. States are arrangements
// indexed by Lehmer rank.
class MtfRule final : public TransitionRule,
                      public std::enable_shared_from_this<MtfRule> {
public:
  MtfRule(int records, std::vector<double> request_weights);

  const DiscreteKernel& kernel() const override;  // materialized lazily; records <= 6
  const StateSpace& space() const override { return space_; }
  DriverKind driver_kind() const override { return DriverKind::FiniteAtom; }
  State apply(State x, const Driver& u) const override;
  Driver sample_driver(RngStream& rng) const override;
  Driver impute_driver(State x_prev, State x_next, RngStream& rng) const override;
  bool enumerable() const override { return exact_weights_.has_value(); }
  std::vector<WeightedDriver> enumerate_drivers() const override;
  std::vector<WeightedDriver> enumerate_conditional(State x_prev, State x_next) const override;

  int records() const { return records_; }
  const std::vector<double>& request_weights() const { return weights_; }

private:
  int records_ = 0;
  std::vector<double> weights_;
  std::optional<std::vector<Rational>> exact_weights_;
  StateSpace space_;
  mutable std::optional<DiscreteKernel> kernel_;
  mutable std::mutex kernel_mutex_;
};

// Watches the set of requested records; coalescence is certified once all
// but at most one record has been requested.
class MtfDetectionProcess final : public DetectionProcess {
public:
  explicit MtfDetectionProcess(int records) : records_(records) {}
  DetectionState initial() const override;
  long advance(DetectionState& d, const Driver& u) const override;
  bool in_target(const DetectionState& d) const override;

private:
  int records_ = 0;
};

std::pair<std::shared_ptr<const MtfRule>, std::shared_ptr<const DetectionProcess>> mtf_process(
    std::vector<double> request_weights);

// Lehmer-code bijection between arrangements and {0 .. records!-1}.
long factorial(int n);
std::vector<State> unrank_arrangement(int records, long rank);
long rank_arrangement(std::span<const State> arrangement);

}  // namespace psamp
