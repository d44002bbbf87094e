#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psamp/driver.hpp"
#include "psamp/errors.hpp"
#include "psamp/kernel.hpp"
#include "psamp/rational.hpp"
#include "psamp/rng.hpp"
#include "psamp/state_space.hpp"

namespace psamp {

struct WeightedDriver {
  Driver driver;
  Rational weight;
};

// A randomized update x -> apply(x, U) with U ~ the driver law, whose
// single-step pushforward from every state reproduces the kernel row.
// Implementations also know how to draw U conditionally on an observed
// transition (x_prev -> x_next), which is what the backward pass feeds on.
class TransitionRule {
public:
  virtual ~TransitionRule() = default;

  virtual const DiscreteKernel& kernel() const = 0;
  virtual const StateSpace& space() const { return kernel().space(); }
  int n() const { return space().n; }
  virtual DriverKind driver_kind() const = 0;

  // Deterministic given (x, u). Throws DriverMismatch on a driver of the
  // wrong kind or shape.
  virtual State apply(State x, const Driver& u) const = 0;

  // A draw from the unconditioned driver law.
  virtual Driver sample_driver(RngStream& rng) const = 0;

  // A draw from L(U | apply(x_prev, U) = x_next). Throws
  // ImpossibleTransition when the kernel entry is zero.
  virtual Driver impute_driver(State x_prev, State x_next, RngStream& rng) const = 0;

  // Exact atom enumeration (finite driver laws with rational weights).
  virtual bool enumerable() const = 0;
  virtual std::vector<WeightedDriver> enumerate_drivers() const = 0;
  virtual std::vector<WeightedDriver> enumerate_conditional(State x_prev, State x_next) const = 0;

protected:
  void check_state(State x) const;
  void check_transition(State x_prev, State x_next) const;
};

enum class Trilean { False, True, Unknown };

struct MonotoneReport {
  Trilean verdict = Trilean::Unknown;
  std::string detail;  // counterexample or certification note
};

// True/false by exhaustive atom check for enumerable rules; inverse-CDF rules
// self-certify against a linear order via CDF domination of adjacent rows.
// Throws NoOrder when the state space carries no partial order.
MonotoneReport is_monotone(const TransitionRule& rule);

// Finite atom set: atom i moves every x to maps[i][x], with probability
// weights[i]. The induced kernel is computed exactly.
class TableRule final : public TransitionRule,
                        public std::enable_shared_from_this<TableRule> {
public:
  const DiscreteKernel& kernel() const override { return kernel_; }
  DriverKind driver_kind() const override { return DriverKind::FiniteAtom; }
  State apply(State x, const Driver& u) const override;
  Driver sample_driver(RngStream& rng) const override;
  Driver impute_driver(State x_prev, State x_next, RngStream& rng) const override;
  bool enumerable() const override { return true; }
  std::vector<WeightedDriver> enumerate_drivers() const override;
  std::vector<WeightedDriver> enumerate_conditional(State x_prev, State x_next) const override;

  int atom_count() const { return static_cast<int>(maps_.size()); }
  const std::vector<Rational>& weights() const { return weights_; }
  const std::vector<std::vector<State>>& maps() const { return maps_; }

private:
  friend std::shared_ptr<const TableRule> make_table_rule(
      StateSpace space, std::vector<Rational> weights, std::vector<std::vector<State>> maps);
  friend std::shared_ptr<const TableRule> make_table_rule(
      const DiscreteKernel& kernel, std::vector<Rational> weights,
      std::vector<std::vector<State>> maps);
  TableRule() = default;

  DiscreteKernel kernel_;
  std::vector<Rational> weights_;
  std::vector<double> weights_dbl_;
  std::vector<std::vector<State>> maps_;
  // consistent_[x*n + y]: atoms moving x to y, for imputation.
  std::vector<std::vector<std::int32_t>> consistent_;
};

// Validates the weights (positive, exact sum 1: BadWeights) and map shapes,
// then derives the induced kernel exactly. The kernel overload additionally
// checks the induced matrix against the given kernel (KernelMismatch) and
// adopts it, preserving its stationary distribution and state space.
std::shared_ptr<const TableRule> make_table_rule(StateSpace space,
                                                 std::vector<Rational> weights,
                                                 std::vector<std::vector<State>> maps);
std::shared_ptr<const TableRule> make_table_rule(const DiscreteKernel& kernel,
                                                 std::vector<Rational> weights,
                                                 std::vector<std::vector<State>> maps);

// Independent-transitions rule: the driver is a whole destination table with
// dest[x] drawn independently from row x. Imputation conditions only the
// observed coordinate and redraws the rest.
std::shared_ptr<const TransitionRule> make_independent_transitions_rule(
    const DiscreteKernel& kernel, long enumeration_cap = 1000000);

// Inverse-CDF rule: a single uniform U hits the half-open segment
// [F(x, y-), F(x, y)) of row x, with segments laid out along `ordering`.
class InverseCdfRule final : public TransitionRule,
                             public std::enable_shared_from_this<InverseCdfRule> {
public:
  const DiscreteKernel& kernel() const override { return kernel_; }
  DriverKind driver_kind() const override { return DriverKind::UnitInterval; }
  State apply(State x, const Driver& u) const override;
  Driver sample_driver(RngStream& rng) const override;
  Driver impute_driver(State x_prev, State x_next, RngStream& rng) const override;
  bool enumerable() const override { return false; }
  std::vector<WeightedDriver> enumerate_drivers() const override;
  std::vector<WeightedDriver> enumerate_conditional(State x_prev, State x_next) const override;

  const std::vector<State>& ordering() const { return ordering_; }

  // Sorted union of all row CDF breakpoints (0 and 1 included). Requires
  // exact kernel entries (IrrationalEntries otherwise).
  std::vector<Rational> segment_boundaries() const;
  // Equivalent finite-atom rule: one atom per boundary segment. Exact.
  std::shared_ptr<const TableRule> discretize() const;

private:
  friend std::shared_ptr<const InverseCdfRule> make_inverse_cdf_rule(
      const DiscreteKernel& kernel, std::optional<std::vector<State>> ordering);
  InverseCdfRule() = default;

  int rank_of(State y) const { return rank_[static_cast<std::size_t>(y)]; }
  // Cumulative row mass strictly before rank r (doubles and, when available,
  // exact rationals).
  double cdf_before(State x, int r) const;

  DiscreteKernel kernel_;
  std::vector<State> ordering_;  // ordering_[r] = state at rank r
  std::vector<int> rank_;        // inverse permutation
  std::optional<std::vector<Rational>> exact_matrix_;  // kernel rows (copies)
};

std::shared_ptr<const InverseCdfRule> make_inverse_cdf_rule(
    const DiscreteKernel& kernel, std::optional<std::vector<State>> ordering = {});

// Drivers for a realized trajectory: drivers[s-1] carries X_{s-1} to X_s.
// Construction re-applies each imputed driver and insists on reproducing the
// trajectory.
struct ImputedDriverSequence {
  std::vector<Driver> drivers;
};

ImputedDriverSequence impute_sequence(const TransitionRule& rule,
                                      std::span<const State> trajectory, RngStream& rng);

}  // namespace psamp
