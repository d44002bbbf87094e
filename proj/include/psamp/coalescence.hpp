#pragma once

#include <boost/dynamic_bitset.hpp>

#include <memory>
#include <optional>
#include <span>
#include <variant>

#include "psamp/driver.hpp"
#include "psamp/transition_rule.hpp"

namespace psamp {

using StateSet = boost::dynamic_bitset<>;

struct BoundingInterval {
  State lo = 0;
  State hi = 0;
};

using DetectionState = std::variant<StateSet, BoundingInterval>;

// Deterministic process D_0, D_s = step(D_{s-1}, U_s) driven only by the
// drivers, with an absorbing target set certifying coalescence. Immutable;
// all per-run state lives in the DetectionState passed around.
class DetectionProcess {
public:
  virtual ~DetectionProcess() = default;

  virtual DetectionState initial() const = 0;
  // Advances in place; returns the number of chain steps consumed (the cost
  // accounting feeds the runtime records).
  virtual long advance(DetectionState& d, const Driver& u) const = 0;
  virtual bool in_target(const DetectionState& d) const = 0;
  // The common state once coalescence is certified, when the detection state
  // itself carries it.
  virtual std::optional<State> certified_state(const DetectionState& d) const {
    (void)d;
    return std::nullopt;
  }
};

// Tracks the exact image of the whole state space; target = singletons.
class FullTrackingProcess final : public DetectionProcess {
public:
  explicit FullTrackingProcess(std::shared_ptr<const TransitionRule> rule);
  DetectionState initial() const override;
  long advance(DetectionState& d, const Driver& u) const override;
  bool in_target(const DetectionState& d) const override;
  std::optional<State> certified_state(const DetectionState& d) const override;

private:
  std::shared_ptr<const TransitionRule> rule_;
};

std::shared_ptr<const FullTrackingProcess> full_tracking_process(
    std::shared_ptr<const TransitionRule> rule);

// Runs the two trajectories started at bottom and top; target = {lo == hi}.
// Exact for monotone rules, which is enforced at construction: the rule must
// certify monotone (NotMonotone), over a space with an order (NoOrder) that
// has both extremes (NoBounds).
class MonotoneBoundingProcess final : public DetectionProcess {
public:
  explicit MonotoneBoundingProcess(std::shared_ptr<const TransitionRule> rule);
  DetectionState initial() const override;
  long advance(DetectionState& d, const Driver& u) const override;
  bool in_target(const DetectionState& d) const override;
  std::optional<State> certified_state(const DetectionState& d) const override;

private:
  std::shared_ptr<const TransitionRule> rule_;
  State bottom_ = 0;
  State top_ = 0;
};

std::shared_ptr<const MonotoneBoundingProcess> monotone_bounding_process(
    std::shared_ptr<const TransitionRule> rule);

struct DetectionResult {
  bool detected = false;
  std::optional<int> first_hit;  // first s with D_s in the target (s=0 checked)
  DetectionState final_state;
  long chain_steps = 0;
};

// Pure function of (process, drivers): runs D along the sequence, stopping at
// the first target hit.
DetectionResult run_detection(const DetectionProcess& process, std::span<const Driver> drivers);

}  // namespace psamp
