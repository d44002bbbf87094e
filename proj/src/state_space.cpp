#include "psamp/state_space.hpp"

#include "psamp/errors.hpp"

namespace psamp {

PartialOrder::PartialOrder(int n, std::vector<bool> leq) : n_(n), leq_(std::move(leq)) {
  validate();
  find_extremes();
}

PartialOrder PartialOrder::linear(int n) {
  if (n < 1) throw Error("BadArgument", "order needs at least one state");
  std::vector<bool> leq(static_cast<std::size_t>(n) * n, false);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) leq[static_cast<std::size_t>(a) * n + b] = true;
  return PartialOrder(n, std::move(leq));
}

PartialOrder PartialOrder::from_pairs(int n, const std::vector<std::pair<State, State>>& pairs) {
  if (n < 1) throw Error("BadArgument", "order needs at least one state");
  std::vector<bool> leq(static_cast<std::size_t>(n) * n, false);
  for (int a = 0; a < n; ++a) leq[static_cast<std::size_t>(a) * n + a] = true;
  for (auto [a, b] : pairs) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw Error("BadArgument", "order pair out of range");
    leq[static_cast<std::size_t>(a) * n + b] = true;
  }
  // transitive closure
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < n; ++a) {
      if (!leq[static_cast<std::size_t>(a) * n + k]) continue;
      for (int b = 0; b < n; ++b)
        if (leq[static_cast<std::size_t>(k) * n + b])
          leq[static_cast<std::size_t>(a) * n + b] = true;
    }
  return PartialOrder(n, std::move(leq));
}

void PartialOrder::validate() const {
  if (leq_.size() != static_cast<std::size_t>(n_) * n_)
    throw Error("BadArgument", "order relation has wrong shape");
  for (int a = 0; a < n_; ++a) {
    if (!le(a, a)) throw Error("BadOrder", "order is not reflexive");
    for (int b = 0; b < n_; ++b) {
      if (a != b && le(a, b) && le(b, a))
        throw Error("BadOrder", "order is not antisymmetric (cycle through " +
                                    std::to_string(a) + " and " + std::to_string(b) + ")");
      if (!le(a, b)) continue;
      for (int c = 0; c < n_; ++c)
        if (le(b, c) && !le(a, c)) throw Error("BadOrder", "order is not transitive");
    }
  }
}

void PartialOrder::find_extremes() {
  for (int a = 0; a < n_; ++a) {
    bool is_bottom = true, is_top = true;
    for (int b = 0; b < n_; ++b) {
      is_bottom = is_bottom && le(a, b);
      is_top = is_top && le(b, a);
    }
    if (is_bottom) bottom_ = a;
    if (is_top) top_ = a;
  }
}

bool PartialOrder::is_linear() const {
  for (int a = 0; a < n_; ++a)
    for (int b = a + 1; b < n_; ++b)
      if (!comparable(a, b)) return false;
  return true;
}

void StateSpace::validate() const {
  if (n < 1) throw Error("BadArgument", "state space needs at least one state");
  if (!labels.empty() && labels.size() != static_cast<std::size_t>(n))
    throw Error("BadArgument", "label count does not match state count");
  if (order && order->n() != n)
    throw Error("BadArgument", "order size does not match state count");
}

StateSpace make_state_space(int n) {
  StateSpace s;
  s.n = n;
  s.validate();
  return s;
}

StateSpace make_ordered_state_space(int n) {
  StateSpace s;
  s.n = n;
  s.order = PartialOrder::linear(n);
  s.validate();
  return s;
}

}  // namespace psamp
