#include "psamp/coalescence.hpp"

namespace psamp {

// ---------------------------------------------------------------------------
// FullTrackingProcess

FullTrackingProcess::FullTrackingProcess(std::shared_ptr<const TransitionRule> rule)
    : rule_(std::move(rule)) {}

DetectionState FullTrackingProcess::initial() const {
  StateSet all(static_cast<std::size_t>(rule_->n()));
  all.set();
  return all;
}

long FullTrackingProcess::advance(DetectionState& d, const Driver& u) const {
  auto& set = std::get<StateSet>(d);
  StateSet next(set.size());
  long cost = 0;
  for (std::size_t x = set.find_first(); x != StateSet::npos; x = set.find_next(x)) {
    next.set(static_cast<std::size_t>(rule_->apply(static_cast<State>(x), u)));
    ++cost;
  }
  set = std::move(next);
  return cost;
}

bool FullTrackingProcess::in_target(const DetectionState& d) const {
  return std::get<StateSet>(d).count() == 1;
}

std::optional<State> FullTrackingProcess::certified_state(const DetectionState& d) const {
  const auto& set = std::get<StateSet>(d);
  if (set.count() != 1) return std::nullopt;
  return static_cast<State>(set.find_first());
}

std::shared_ptr<const FullTrackingProcess> full_tracking_process(
    std::shared_ptr<const TransitionRule> rule) {
  return std::make_shared<FullTrackingProcess>(std::move(rule));
}

// ---------------------------------------------------------------------------
// MonotoneBoundingProcess

MonotoneBoundingProcess::MonotoneBoundingProcess(std::shared_ptr<const TransitionRule> rule)
    : rule_(std::move(rule)) {
  const StateSpace& space = rule_->space();
  if (!space.order) throw NoOrder("bounding needs a partially ordered state space");
  if (!space.order->bottom() || !space.order->top())
    throw NoBounds("bounding needs both a bottom and a top state");
  const MonotoneReport report = is_monotone(*rule_);
  if (report.verdict != Trilean::True)
    throw NotMonotone("rule is not certified monotone: " + report.detail);
  bottom_ = *space.order->bottom();
  top_ = *space.order->top();
}

DetectionState MonotoneBoundingProcess::initial() const {
  return BoundingInterval{bottom_, top_};
}

long MonotoneBoundingProcess::advance(DetectionState& d, const Driver& u) const {
  auto& iv = std::get<BoundingInterval>(d);
  iv.lo = rule_->apply(iv.lo, u);
  iv.hi = rule_->apply(iv.hi, u);
  return 2;
}

bool MonotoneBoundingProcess::in_target(const DetectionState& d) const {
  const auto& iv = std::get<BoundingInterval>(d);
  return iv.lo == iv.hi;
}

std::optional<State> MonotoneBoundingProcess::certified_state(const DetectionState& d) const {
  const auto& iv = std::get<BoundingInterval>(d);
  if (iv.lo != iv.hi) return std::nullopt;
  return iv.lo;
}

std::shared_ptr<const MonotoneBoundingProcess> monotone_bounding_process(
    std::shared_ptr<const TransitionRule> rule) {
  return std::make_shared<MonotoneBoundingProcess>(std::move(rule));
}

// ---------------------------------------------------------------------------

DetectionResult run_detection(const DetectionProcess& process, std::span<const Driver> drivers) {
  DetectionResult result;
  result.final_state = process.initial();
  if (process.in_target(result.final_state)) {
    result.detected = true;
    result.first_hit = 0;
    return result;
  }
  for (std::size_t s = 0; s < drivers.size(); ++s) {
    result.chain_steps += process.advance(result.final_state, drivers[s]);
    if (process.in_target(result.final_state)) {
      result.detected = true;
      result.first_hit = static_cast<int>(s + 1);
      return result;
    }
  }
  return result;
}

}  //  namespace psamp
