#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace psamp {

using State = std::int32_t;

// Partial order on {0..n-1} stored as a dense <= relation. Construction
// validates reflexivity, antisymmetry and transitivity; bottom/top are the
// unique global minimum/maximum when they exist.
class PartialOrder {
public:
  static PartialOrder linear(int n);
  // Reflexive-transitive closure of the given pairs (a <= b). Throws Error
  // if the closure is not antisymmetric.
  static PartialOrder from_pairs(int n, const std::vector<std::pair<State, State>>& pairs);

  int n() const { return n_; }
  bool le(State a, State b) const { return leq_[static_cast<std::size_t>(a) * n_ + b]; }
  bool comparable(State a, State b) const { return le(a, b) || le(b, a); }
  bool is_linear() const;
  std::optional<State> bottom() const { return bottom_; }
  std::optional<State> top() const { return top_; }

private:
  PartialOrder(int n, std::vector<bool> leq);
  void validate() const;
  void find_extremes();

  int n_ = 0;
  std::vector<bool> leq_;  // row-major: leq_[a*n + b] means a <= b
  std::optional<State> bottom_;
  std::optional<State> top_;
};

struct StateSpace {
  int n = 0;
  std::vector<std::string> labels;  // empty, or one label per state
  std::optional<PartialOrder> order;

  // Throws Error on n < 1 or size mismatches.
  void validate() const;

  std::string label(State x) const {
    return labels.empty() ? std::to_string(x) : labels[static_cast<std::size_t>(x)];
  }
};

StateSpace make_state_space(int n);
StateSpace make_ordered_state_space(int n);  // with the linear order 0 < 1 < ... < n-1

}  // namespace psamp
