#include "psamp/transition_rule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace psamp {

namespace {

std::size_t idx(int n, State x, State y) {
  return static_cast<std::size_t>(x) * n + y;
}

}  // namespace

void TransitionRule::check_state(State x) const {
  if (x < 0 || x >= n())
    throw Error("BadArgument", "state " + std::to_string(x) + " out of range");
}

void TransitionRule::check_transition(State x_prev, State x_next) const {
  check_state(x_prev);
  check_state(x_next);
  if (kernel().at(x_prev, x_next) <= 0.0)
    throw ImpossibleTransition("transition " + std::to_string(x_prev) + " -> " +
                               std::to_string(x_next) + " has zero kernel mass");
}

// ---------------------------------------------------------------------------
// TableRule

State TableRule::apply(State x, const Driver& u) const {
  check_state(x);
  const auto* atom = std::get_if<AtomDriver>(&u);
  if (!atom) throw DriverMismatch("table rule expects a finite-atom driver");
  if (atom->index < 0 || atom->index >= atom_count())
    throw DriverMismatch("atom index " + std::to_string(atom->index) + " out of range");
  return maps_[static_cast<std::size_t>(atom->index)][static_cast<std::size_t>(x)];
}

Driver TableRule::sample_driver(RngStream& rng) const {
  return AtomDriver{rng.sample_index(weights_dbl_)};
}

Driver TableRule::impute_driver(State x_prev, State x_next, RngStream& rng) const {
  check_transition(x_prev, x_next);
  const auto& atoms = consistent_[idx(n(), x_prev, x_next)];
  if (atoms.size() == 1) return AtomDriver{atoms[0]};
  std::vector<double> w(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i)
    w[i] = weights_dbl_[static_cast<std::size_t>(atoms[i])];
  return AtomDriver{atoms[static_cast<std::size_t>(rng.sample_index(w))]};
}

std::vector<WeightedDriver> TableRule::enumerate_drivers() const {
  std::vector<WeightedDriver> out;
  out.reserve(maps_.size());
  for (std::int32_t i = 0; i < atom_count(); ++i)
    out.push_back({AtomDriver{i}, weights_[static_cast<std::size_t>(i)]});
  return out;
}

std::vector<WeightedDriver> TableRule::enumerate_conditional(State x_prev, State x_next) const {
  check_transition(x_prev, x_next);
  const auto& atoms = consistent_[idx(n(), x_prev, x_next)];
  Rational total = 0;
  for (auto i : atoms) total += weights_[static_cast<std::size_t>(i)];
  std::vector<WeightedDriver> out;
  out.reserve(atoms.size());
  for (auto i : atoms)
    out.push_back({AtomDriver{i}, weights_[static_cast<std::size_t>(i)] / total});
  return out;
}

namespace {

struct TableParts {
  std::vector<Rational> weights;
  std::vector<double> weights_dbl;
  std::vector<std::vector<State>> maps;
  std::vector<Rational> induced;  // exact pushforward kernel
  std::vector<std::vector<std::int32_t>> consistent;
};

TableParts check_table_parts(int n, std::vector<Rational> weights,
                             std::vector<std::vector<State>> maps) {
  if (weights.size() != maps.size() || weights.empty())
    throw BadWeights("need one weight per map, at least one atom");
  Rational sum = 0;
  for (const Rational& w : weights) {
    if (w <= 0) throw BadWeights("atom weights must be positive");
    sum += w;
  }
  if (sum != 1) throw BadWeights("atom weights sum to " + format_rational(sum));
  for (const auto& m : maps) {
    if (m.size() != static_cast<std::size_t>(n))
      throw Error("BadArgument", "map has wrong length");
    for (State y : m)
      if (y < 0 || y >= n) throw Error("BadArgument", "map targets a state out of range");
  }

  TableParts parts;
  parts.induced.assign(static_cast<std::size_t>(n) * n, Rational(0));
  parts.consistent.assign(static_cast<std::size_t>(n) * n, {});
  for (std::size_t i = 0; i < maps.size(); ++i)
    for (int x = 0; x < n; ++x) {
      const State y = maps[i][static_cast<std::size_t>(x)];
      parts.induced[idx(n, x, y)] += weights[i];
      parts.consistent[idx(n, x, y)].push_back(static_cast<std::int32_t>(i));
    }
  parts.weights_dbl.reserve(weights.size());
  for (const Rational& w : weights) parts.weights_dbl.push_back(rational_to_double(w));
  parts.weights = std::move(weights);
  parts.maps = std::move(maps);
  return parts;
}

}  // namespace

std::shared_ptr<const TableRule> make_table_rule(StateSpace space, std::vector<Rational> weights,
                                                 std::vector<std::vector<State>> maps) {
  space.validate();
  TableParts parts = check_table_parts(space.n, std::move(weights), std::move(maps));
  auto rule = std::shared_ptr<TableRule>(new TableRule());
  rule->kernel_ = DiscreteKernel::build_exact(std::move(space), parts.induced);
  rule->weights_ = std::move(parts.weights);
  rule->weights_dbl_ = std::move(parts.weights_dbl);
  rule->maps_ = std::move(parts.maps);
  rule->consistent_ = std::move(parts.consistent);
  return rule;
}

std::shared_ptr<const TableRule> make_table_rule(const DiscreteKernel& kernel,
                                                 std::vector<Rational> weights,
                                                 std::vector<std::vector<State>> maps) {
  const int n = kernel.n();
  TableParts parts = check_table_parts(n, std::move(weights), std::move(maps));
  if (kernel.exact()) {
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        if (parts.induced[idx(n, x, y)] != kernel.exact_at(x, y))
          throw KernelMismatch("atom pushforward disagrees with the kernel at (" +
                               std::to_string(x) + ", " + std::to_string(y) + ")");
  } else {
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        if (std::fabs(rational_to_double(parts.induced[idx(n, x, y)]) - kernel.at(x, y)) > 1e-12)
          throw KernelMismatch("atom pushforward disagrees with the kernel at (" +
                               std::to_string(x) + ", " + std::to_string(y) + ")");
  }
  auto rule = std::shared_ptr<TableRule>(new TableRule());
  rule->kernel_ = kernel;
  rule->weights_ = std::move(parts.weights);
  rule->weights_dbl_ = std::move(parts.weights_dbl);
  rule->maps_ = std::move(parts.maps);
  rule->consistent_ = std::move(parts.consistent);
  return rule;
}

// ---------------------------------------------------------------------------
// Independent-transitions rule

namespace {

class IndependentRule final : public TransitionRule {
public:
  IndependentRule(DiscreteKernel kernel, long cap)
      : kernel_(std::move(kernel)), cap_(cap) {
    const int n = kernel_.n();
    support_.resize(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        if (kernel_.at(x, y) > 0.0) support_[static_cast<std::size_t>(x)].push_back(y);
    if (kernel_.exact()) {
      exact_rows_ = kernel_.exact_matrix();
    } else if (auto r = exactify_all(kernel_.matrix())) {
      exact_rows_ = std::move(*r);
    }
    combos_ = 1;
    for (int x = 0; x < n; ++x) {
      combos_ *= static_cast<long>(support_[static_cast<std::size_t>(x)].size());
      if (combos_ > cap_) break;  // saturated; only the comparison matters
    }
  }

  const DiscreteKernel& kernel() const override { return kernel_; }
  DriverKind driver_kind() const override { return DriverKind::DestinationTable; }

  State apply(State x, const Driver& u) const override {
    check_state(x);
    const auto* table = std::get_if<TableDriver>(&u);
    if (!table) throw DriverMismatch("independent-transitions rule expects a destination table");
    if (table->dest.size() != static_cast<std::size_t>(n()))
      throw DriverMismatch("destination table has wrong length");
    return table->dest[static_cast<std::size_t>(x)];
  }

  Driver sample_driver(RngStream& rng) const override {
    TableDriver d;
    d.dest.resize(static_cast<std::size_t>(n()));
    for (int x = 0; x < n(); ++x)
      d.dest[static_cast<std::size_t>(x)] = static_cast<State>(rng.sample_index(kernel_.row(x)));
    return d;
  }

  Driver impute_driver(State x_prev, State x_next, RngStream& rng) const override {
    check_transition(x_prev, x_next);
    // Condition pins the observed coordinate only; the rest stays fresh.
    TableDriver d;
    d.dest.resize(static_cast<std::size_t>(n()));
    for (int x = 0; x < n(); ++x)
      d.dest[static_cast<std::size_t>(x)] =
          x == x_prev ? x_next : static_cast<State>(rng.sample_index(kernel_.row(x)));
    return d;
  }

  bool enumerable() const override { return exact_rows_.has_value() && combos_ <= cap_; }

  std::vector<WeightedDriver> enumerate_drivers() const override {
    ensure_enumerable();
    std::vector<WeightedDriver> out;
    out.reserve(static_cast<std::size_t>(combos_));
    TableDriver d;
    d.dest.assign(static_cast<std::size_t>(n()), 0);
    walk(0, Rational(1), -1, 0, d, out);
    return out;
  }

  std::vector<WeightedDriver> enumerate_conditional(State x_prev, State x_next) const override {
    check_transition(x_prev, x_next);
    ensure_enumerable();
    std::vector<WeightedDriver> out;
    TableDriver d;
    d.dest.assign(static_cast<std::size_t>(n()), 0);
    walk(0, Rational(1), x_prev, x_next, d, out);
    return out;
  }

private:
  void ensure_enumerable() const {
    if (!exact_rows_)
      throw IrrationalEntries("kernel entries have no exact rational form");
    if (combos_ > cap_)
      throw EnumerationTooLarge("driver table count exceeds the enumeration cap");
  }

  // Lexicographic product walk over per-state supports; `pin` fixes one
  // coordinate (the conditioned transition), whose row factor then cancels.
  void walk(int x, Rational weight, State pin, State pin_dest, TableDriver& d,
            std::vector<WeightedDriver>& out) const {
    if (x == n()) {
      out.push_back({d, weight});
      return;
    }
    if (x == pin) {
      d.dest[static_cast<std::size_t>(x)] = pin_dest;
      walk(x + 1, weight, pin, pin_dest, d, out);
      return;
    }
    for (State y : support_[static_cast<std::size_t>(x)]) {
      d.dest[static_cast<std::size_t>(x)] = y;
      walk(x + 1, weight * (*exact_rows_)[idx(n(), x, y)], pin, pin_dest, d, out);
    }
  }

  DiscreteKernel kernel_;
  long cap_;
  long combos_ = 1;
  std::vector<std::vector<State>> support_;
  std::optional<std::vector<Rational>> exact_rows_;
};

}  // namespace

std::shared_ptr<const TransitionRule> make_independent_transitions_rule(
    const DiscreteKernel& kernel, long enumeration_cap) {
  return std::make_shared<IndependentRule>(kernel, enumeration_cap);
}

// ---------------------------------------------------------------------------
// Inverse-CDF rule

State InverseCdfRule::apply(State x, const Driver& u) const {
  check_state(x);
  const auto* unit = std::get_if<UnitDriver>(&u);
  if (!unit) throw DriverMismatch("inverse-CDF rule expects a unit-interval driver");
  if (!(unit->u >= 0.0) || unit->u >= 1.0)
    throw DriverMismatch("unit driver outside [0, 1)");
  double cum = 0.0;
  State last_positive = -1;
  const int m = n();
  for (int r = 0; r < m; ++r) {
    const State y = ordering_[static_cast<std::size_t>(r)];
    const double p = kernel_.at(x, y);
    if (p > 0.0) last_positive = y;
    cum += p;
    if (unit->u < cum) return y;
  }
  return last_positive;  // floating-point shortfall at the top end
}

Driver InverseCdfRule::sample_driver(RngStream& rng) const {
  return UnitDriver{rng.next_unit()};
}

double InverseCdfRule::cdf_before(State x, int r) const {
  double cum = 0.0;
  for (int i = 0; i < r; ++i) cum += kernel_.at(x, ordering_[static_cast<std::size_t>(i)]);
  return cum;
}

Driver InverseCdfRule::impute_driver(State x_prev, State x_next, RngStream& rng) const {
  check_transition(x_prev, x_next);
  // Uniform on the half-open segment of row x_prev owned by x_next.
  const double lo = cdf_before(x_prev, rank_of(x_next));
  const double len = kernel_.at(x_prev, x_next);
  double u = lo + rng.next_unit() * len;
  if (u >= lo + len) u = lo;  // guard the closed upper end against round-up
  return UnitDriver{u};
}

std::vector<WeightedDriver> InverseCdfRule::enumerate_drivers() const {
  throw EnumerationTooLarge("inverse-CDF drivers are continuous; use discretize()");
}

std::vector<WeightedDriver> InverseCdfRule::enumerate_conditional(State, State) const {
  throw EnumerationTooLarge("inverse-CDF drivers are continuous; use discretize()");
}

std::vector<Rational> InverseCdfRule::segment_boundaries() const {
  if (!exact_matrix_)
    throw IrrationalEntries("kernel entries have no exact rational form");
  std::vector<Rational> bounds{Rational(0)};
  const int m = n();
  for (int x = 0; x < m; ++x) {
    Rational cum = 0;
    for (int r = 0; r < m; ++r) {
      cum += (*exact_matrix_)[idx(m, x, ordering_[static_cast<std::size_t>(r)])];
      bounds.push_back(cum);
    }
  }
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
  return bounds;
}

std::shared_ptr<const TableRule> InverseCdfRule::discretize() const {
  const std::vector<Rational> bounds = segment_boundaries();
  const int m = n();
  std::vector<Rational> weights;
  std::vector<std::vector<State>> maps;
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    weights.push_back(bounds[i + 1] - bounds[i]);
    std::vector<State> map(static_cast<std::size_t>(m));
    for (int x = 0; x < m; ++x) {
      // The state whose exact segment of row x contains bounds[i].
      Rational cum = 0;
      State hit = -1;
      for (int r = 0; r < m; ++r) {
        const State y = ordering_[static_cast<std::size_t>(r)];
        cum += (*exact_matrix_)[idx(m, x, y)];
        if (bounds[i] < cum) {
          hit = y;
          break;
        }
      }
      map[static_cast<std::size_t>(x)] = hit;
    }
    maps.push_back(std::move(map));
  }
  // Building against the original kernel doubles as an exactness check.
  return make_table_rule(kernel_, std::move(weights), std::move(maps));
}

std::shared_ptr<const InverseCdfRule> make_inverse_cdf_rule(
    const DiscreteKernel& kernel, std::optional<std::vector<State>> ordering) {
  const int n = kernel.n();
  std::vector<State> ord;
  if (ordering) {
    ord = std::move(*ordering);
    if (ord.size() != static_cast<std::size_t>(n))
      throw Error("BadArgument", "ordering has wrong length");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (State y : ord) {
      if (y < 0 || y >= n || seen[static_cast<std::size_t>(y)])
        throw Error("BadArgument", "ordering is not a permutation");
      seen[static_cast<std::size_t>(y)] = true;
    }
  } else {
    ord.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ord[static_cast<std::size_t>(i)] = i;
  }

  auto rule = std::shared_ptr<InverseCdfRule>(new InverseCdfRule());
  rule->kernel_ = kernel;
  rule->ordering_ = std::move(ord);
  rule->rank_.resize(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r)
    rule->rank_[static_cast<std::size_t>(rule->ordering_[static_cast<std::size_t>(r)])] = r;
  if (kernel.exact()) {
    rule->exact_matrix_ = kernel.exact_matrix();
  } else if (auto e = exactify_all(kernel.matrix())) {
    rule->exact_matrix_ = std::move(*e);
  }
  return rule;
}

// ---------------------------------------------------------------------------
// Monotonicity

namespace {

MonotoneReport certify_inverse_cdf(const InverseCdfRule& rule) {
  const StateSpace& space = rule.space();
  const PartialOrder& order = *space.order;
  const int n = space.n;
  if (!order.is_linear())
    return {Trilean::Unknown, "continuous driver over a non-linear order"};
  // The rule's ordering must walk the order from bottom to top.
  for (int r = 0; r + 1 < n; ++r)
    if (!order.le(rule.ordering()[static_cast<std::size_t>(r)],
                  rule.ordering()[static_cast<std::size_t>(r + 1)]))
      return {Trilean::Unknown, "segment ordering disagrees with the state order"};

  // Stochastic monotonicity via CDF domination of adjacent rows, which the
  // inverse map turns into pointwise monotonicity in x for every u.
  const DiscreteKernel& k = rule.kernel();
  const bool exact = k.exact();
  for (int r = 0; r + 1 < n; ++r) {
    const State a = rule.ordering()[static_cast<std::size_t>(r)];
    const State b = rule.ordering()[static_cast<std::size_t>(r + 1)];
    Rational ca = 0, cb = 0;
    double da = 0, db = 0;
    for (int s = 0; s < n; ++s) {
      const State y = rule.ordering()[static_cast<std::size_t>(s)];
      if (exact) {
        ca += k.exact_at(a, y);
        cb += k.exact_at(b, y);
        if (cb > ca) {
          std::ostringstream os;
          os << "row " << b << " fails to dominate row " << a << " at prefix rank " << s;
          return {Trilean::False, os.str()};
        }
      } else {
        da += k.at(a, y);
        db += k.at(b, y);
        if (db > da + 1e-12) {
          std::ostringstream os;
          os << "row " << b << " fails to dominate row " << a << " at prefix rank " << s;
          return {Trilean::False, os.str()};
        }
      }
    }
  }
  return {Trilean::True, "adjacent rows are stochastically ordered"};
}

}  // namespace

MonotoneReport is_monotone(const TransitionRule& rule) {
  const StateSpace& space = rule.space();
  if (!space.order) throw NoOrder("state space carries no partial order");

  if (const auto* inv = dynamic_cast<const InverseCdfRule*>(&rule))
    return certify_inverse_cdf(*inv);
  if (!rule.enumerable())
    return {Trilean::Unknown, "rule is not enumerable"};

  const PartialOrder& order = *space.order;
  const int n = space.n;
  const auto atoms = rule.enumerate_drivers();
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (State x = 0; x < n; ++x)
      for (State y = 0; y < n; ++y) {
        if (x == y || !order.le(x, y)) continue;
        const State fx = rule.apply(x, atoms[i].driver);
        const State fy = rule.apply(y, atoms[i].driver);
        if (!order.le(fx, fy)) {
          std::ostringstream os;
          os << "atom " << i << " maps " << x << " <= " << y << " to incomparable-or-reversed "
             << fx << ", " << fy;
          return {Trilean::False, os.str()};
        }
      }
  return {Trilean::True, "all atoms preserve the order"};
}

// ---------------------------------------------------------------------------

ImputedDriverSequence impute_sequence(const TransitionRule& rule,
                                      std::span<const State> trajectory, RngStream& rng) {
  if (trajectory.size() < 1) throw Error("BadArgument", "trajectory is empty");
  ImputedDriverSequence seq;
  seq.drivers.reserve(trajectory.size() - 1);
  for (std::size_t s = 1; s < trajectory.size(); ++s) {
    Driver d = rule.impute_driver(trajectory[s - 1], trajectory[s], rng);
    if (rule.apply(trajectory[s - 1], d) != trajectory[s])
      throw Error("ImputationFailed", "imputed driver does not reproduce the trajectory");
    seq.drivers.push_back(std::move(d));
  }
  return seq;
}

}  // namespace psamp
