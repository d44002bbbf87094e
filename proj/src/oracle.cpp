#include "psamp/oracle.hpp"

#include <functional>
#include <numeric>
#include <string>

#include "psamp/coalescence.hpp"

namespace psamp {

namespace {

std::size_t idx(int n, State x, State y) {
  return static_cast<std::size_t>(x) * n + y;
}

// Finite-atom view of a rule: the atoms themselves plus, for every observed
// transition, the consistent atom set and its total weight (the conditional
// normalizer). Inverse-CDF rules contribute their segment partition.
struct AtomView {
  std::shared_ptr<const TableRule> rule;
  int n = 0;
  std::vector<std::vector<std::int32_t>> consistent;  // (x*n+y) -> atom ids
  std::vector<Rational> cond_total;                   // (x*n+y) -> summed weight
};

AtomView atomize(const TransitionRule& rule) {
  std::shared_ptr<const TableRule> atom_rule;
  if (const auto* inv = dynamic_cast<const InverseCdfRule*>(&rule)) {
    atom_rule = inv->discretize();
  } else if (const auto* tab = dynamic_cast<const TableRule*>(&rule)) {
    atom_rule = tab->shared_from_this();
  } else {
    const auto drivers = rule.enumerate_drivers();
    const int n = rule.n();
    std::vector<Rational> weights;
    std::vector<std::vector<State>> maps;
    weights.reserve(drivers.size());
    maps.reserve(drivers.size());
    for (const auto& wd : drivers) {
      weights.push_back(wd.weight);
      std::vector<State> map(static_cast<std::size_t>(n));
      for (State x = 0; x < n; ++x) map[static_cast<std::size_t>(x)] = rule.apply(x, wd.driver);
      maps.push_back(std::move(map));
    }
    // Rebuilding against the rule's kernel doubles as a pushforward check.
    atom_rule = make_table_rule(rule.kernel(), std::move(weights), std::move(maps));
  }

  AtomView view;
  view.n = atom_rule->n();
  const int n = view.n;
  view.consistent.assign(static_cast<std::size_t>(n) * n, {});
  view.cond_total.assign(static_cast<std::size_t>(n) * n, Rational(0));
  for (std::int32_t i = 0; i < atom_rule->atom_count(); ++i)
    for (State x = 0; x < n; ++x) {
      const State y = atom_rule->maps()[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)];
      view.consistent[idx(n, x, y)].push_back(i);
      view.cond_total[idx(n, x, y)] += atom_rule->weights()[static_cast<std::size_t>(i)];
    }
  view.rule = std::move(atom_rule);
  return view;
}

std::shared_ptr<const DetectionProcess> make_tracker(const AtomView& view, TrackerKind kind) {
  if (kind == TrackerKind::MonotoneBounding) return monotone_bounding_process(view.rule);
  return full_tracking_process(view.rule);
}

// Detection evaluated on a composed update map rather than along a driver
// sequence; composing a new oldest step in front keeps the map incremental.
struct CompDetector {
  TrackerKind kind = TrackerKind::FullTracking;
  State bottom = 0;
  State top = 0;

  bool detect(const std::vector<State>& comp) const {
    if (kind == TrackerKind::MonotoneBounding)
      return comp[static_cast<std::size_t>(bottom)] == comp[static_cast<std::size_t>(top)];
    for (std::size_t x = 1; x < comp.size(); ++x)
      if (comp[x] != comp[0]) return false;
    return true;
  }
};

CompDetector make_comp_detector(const AtomView& view, TrackerKind kind) {
  CompDetector det;
  det.kind = kind;
  if (kind == TrackerKind::MonotoneBounding) {
    monotone_bounding_process(view.rule);  // runs the eligibility checks
    det.bottom = *view.rule->space().order->bottom();
    det.top = *view.rule->space().order->top();
  }
  return det;
}

long saturating_mul(long a, long b, long cap) {
  if (b > 0 && a > cap / b) return cap + 1;
  return a * b;
}

long saturating_pow(long base, int exp, long cap) {
  long out = 1;
  for (int i = 0; i < exp; ++i) {
    out = saturating_mul(out, base, cap);
    if (out > cap) return out;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

RationalChainView exact_chain_view(const DiscreteKernel& kernel) {
  RationalChainView view;
  view.n = kernel.n();
  const int n = view.n;
  if (kernel.exact()) {
    view.matrix = kernel.exact_matrix();
    view.pi = kernel.exact_pi();
  } else {
    auto matrix = exactify_all(kernel.matrix());
    if (!matrix) throw IrrationalEntries("kernel entries have no exact rational form");
    view.matrix = std::move(*matrix);
    for (State x = 0; x < n; ++x) {
      Rational sum = 0;
      for (State y = 0; y < n; ++y) sum += view.matrix[idx(n, x, y)];
      if (sum != 1)
        throw IrrationalEntries("row " + std::to_string(x) +
                                " does not sum to 1 after exactification");
    }
    view.pi = solve_stationary_exact(n, view.matrix);
  }
  for (State y = 0; y < n; ++y)
    if (view.pi[static_cast<std::size_t>(y)] == 0)
      throw ZeroMassState("state " + std::to_string(y) + " has zero stationary mass");
  view.reversed.assign(static_cast<std::size_t>(n) * n, Rational(0));
  for (State x = 0; x < n; ++x)
    for (State y = 0; y < n; ++y)
      view.reversed[idx(n, y, x)] = view.pi[static_cast<std::size_t>(x)] *
                                    view.matrix[idx(n, x, y)] /
                                    view.pi[static_cast<std::size_t>(y)];
  return view;
}

// ---------------------------------------------------------------------------

AcceptanceReport exact_fill_report(const TransitionRule& rule, int t, State z,
                                   const OracleOptions& opts) {
  if (t < 0) throw Error("BadArgument", "horizon must be nonnegative");
  const AtomView view = atomize(rule);
  const int n = view.n;
  if (z < 0 || z >= n) throw Error("BadArgument", "terminal state out of range");
  const RationalChainView chain = exact_chain_view(view.rule->kernel());
  const auto tracker = make_tracker(view, opts.tracker);
  const auto& weights = view.rule->weights();

  std::vector<Rational> accept(static_cast<std::size_t>(n), Rational(0));
  long outcomes = 0;
  std::vector<State> path(static_cast<std::size_t>(t) + 1);
  path[static_cast<std::size_t>(t)] = z;

  // Leaves under a subtree whose remaining steps are s_begin..t; used when a
  // detected prefix makes every completion accept.
  auto leaves_from = [&](int s_begin) {
    long leaves = 1;
    for (int s = s_begin; s <= t; ++s) {
      const auto& atoms =
          view.consistent[idx(n, path[static_cast<std::size_t>(s - 1)],
                              path[static_cast<std::size_t>(s)])];
      leaves = saturating_mul(leaves, static_cast<long>(atoms.size()), opts.cap);
      if (leaves > opts.cap) break;
    }
    return leaves;
  };
  auto add_outcomes = [&](long k) {
    outcomes += k;
    if (outcomes > opts.cap)
      throw EnumerationTooLarge("outcome enumeration exceeds the cap");
  };

  // Conditional driver assignments along the fixed trajectory, detection
  // state shared along the DFS prefix.
  std::function<void(int, const Rational&, const DetectionState&)> assign =
      [&](int s, const Rational& w, const DetectionState& d) {
        if (s > t) {
          add_outcomes(1);  // ran out of window without detection
          return;
        }
        const std::size_t e = idx(n, path[static_cast<std::size_t>(s - 1)],
                                  path[static_cast<std::size_t>(s)]);
        for (std::int32_t i : view.consistent[e]) {
          const Rational w2 =
              w * weights[static_cast<std::size_t>(i)] / view.cond_total[e];
          DetectionState d2 = d;
          tracker->advance(d2, AtomDriver{i});
          if (tracker->in_target(d2)) {
            accept[static_cast<std::size_t>(path[0])] += w2;
            add_outcomes(leaves_from(s + 1));
          } else {
            assign(s + 1, w2, d2);
          }
        }
      };

  // Backward sweep: path[s-1] drawn from the reversed row at path[s].
  std::function<void(int, const Rational&)> backward = [&](int s, const Rational& w) {
    if (s == 0) {
      const DetectionState d0 = tracker->initial();
      if (tracker->in_target(d0)) {
        accept[static_cast<std::size_t>(path[0])] += w;
        add_outcomes(leaves_from(1));
      } else if (t == 0) {
        add_outcomes(1);
      } else {
        assign(1, w, d0);
      }
      return;
    }
    for (State x = 0; x < n; ++x) {
      const Rational& q = chain.reversed[idx(n, path[static_cast<std::size_t>(s)], x)];
      if (q == 0) continue;
      path[static_cast<std::size_t>(s - 1)] = x;
      backward(s - 1, w * q);
    }
  };
  backward(t, Rational(1));

  AcceptanceReport report;
  report.outcome_count = outcomes;
  for (State x = 0; x < n; ++x) report.p_accept += accept[static_cast<std::size_t>(x)];
  if (report.p_accept != 0) {
    ExactDistribution cond;
    cond.w.resize(static_cast<std::size_t>(n));
    for (State x = 0; x < n; ++x)
      cond.w[static_cast<std::size_t>(x)] = accept[static_cast<std::size_t>(x)] / report.p_accept;
    report.conditional_output = std::move(cond);
  }
  return report;
}

// ---------------------------------------------------------------------------

Rational exact_forward_coalescence(const TransitionRule& rule, int t,
                                   const OracleOptions& opts) {
  if (t < 0) throw Error("BadArgument", "horizon must be nonnegative");
  const AtomView view = atomize(rule);
  const auto tracker = make_tracker(view, opts.tracker);
  const auto& weights = view.rule->weights();
  const long atom_count = view.rule->atom_count();

  Rational prob = 0;
  long outcomes = 0;
  auto add_outcomes = [&](long k) {
    outcomes += k;
    if (outcomes > opts.cap)
      throw EnumerationTooLarge("outcome enumeration exceeds the cap");
  };

  std::function<void(int, const Rational&, const DetectionState&)> walk =
      [&](int s, const Rational& w, const DetectionState& d) {
        if (s > t) {
          add_outcomes(1);
          return;
        }
        for (std::int32_t i = 0; i < atom_count; ++i) {
          const Rational w2 = w * weights[static_cast<std::size_t>(i)];
          DetectionState d2 = d;
          tracker->advance(d2, AtomDriver{i});
          if (tracker->in_target(d2)) {
            prob += w2;
            add_outcomes(saturating_pow(atom_count, t - s, opts.cap));
          } else {
            walk(s + 1, w2, d2);
          }
        }
      };

  const DetectionState d0 = tracker->initial();
  if (tracker->in_target(d0)) return Rational(1);
  if (t > 0) walk(1, Rational(1), d0);
  return prob;
}

// ---------------------------------------------------------------------------

PiAverageReport pi_average_check(const TransitionRule& rule, int t,
                                 const OracleOptions& opts) {
  const AtomView view = atomize(rule);
  const RationalChainView chain = exact_chain_view(view.rule->kernel());
  PiAverageReport report;
  report.per_state.resize(static_cast<std::size_t>(view.n));
  for (State z = 0; z < view.n; ++z) {
    report.per_state[static_cast<std::size_t>(z)] = exact_fill_report(rule, t, z, opts).p_accept;
    report.lhs += chain.pi[static_cast<std::size_t>(z)] *
                  report.per_state[static_cast<std::size_t>(z)];
  }
  report.rhs = exact_forward_coalescence(rule, t, opts);
  report.equal = report.lhs == report.rhs;
  return report;
}

// ---------------------------------------------------------------------------

std::map<int, Rational> JointTW::t_marginal() const {
  std::map<int, Rational> out;
  for (const auto& [key, p] : mass) out[key.first] += p;
  return out;
}

std::map<State, Rational> JointTW::w_marginal() const {
  std::map<State, Rational> out;
  for (const auto& [key, p] : mass) out[key.second] += p;
  return out;
}

bool JointTW::factorizes() const {
  const auto tm = t_marginal();
  for (const auto& [t, pt] : tm)
    for (State w = 0; w < static_cast<State>(pi.size()); ++w) {
      const auto it = mass.find({t, w});
      const Rational have = it == mass.end() ? Rational(0) : it->second;
      if (have != pt * pi[static_cast<std::size_t>(w)]) return false;
    }
  return true;
}

JointTW exact_joint_T_W(const TransitionRule& rule, int t_max, const OracleOptions& opts) {
  if (t_max < 0) throw Error("BadArgument", "t_max must be nonnegative");
  const AtomView view = atomize(rule);
  const int n = view.n;
  const RationalChainView chain = exact_chain_view(view.rule->kernel());
  const CompDetector det = make_comp_detector(view, opts.tracker);
  const auto& weights = view.rule->weights();
  const auto& maps = view.rule->maps();

  JointTW out;
  out.pi = chain.pi;
  long nodes = 0;

  // comp is the forward composition of the imputed drivers at depths d-1..0;
  // detection at window width d is a pure function of it. x_back = X_{-d}.
  std::function<void(int, State, const std::vector<State>&, const Rational&)> extend =
      [&](int d, State x_back, const std::vector<State>& comp, const Rational& w) {
        if (++nodes > opts.cap)
          throw EnumerationTooLarge("outcome enumeration exceeds the cap");
        if (det.detect(comp)) {
          out.mass[{d, x_back}] += w;
          return;
        }
        if (d == t_max) {
          out.residual += w;
          return;
        }
        for (State x_next = 0; x_next < n; ++x_next) {
          const Rational& q = chain.reversed[idx(n, x_back, x_next)];
          if (q == 0) continue;
          const std::size_t e = idx(n, x_next, x_back);
          for (std::int32_t i : view.consistent[e]) {
            const Rational w2 =
                w * q * weights[static_cast<std::size_t>(i)] / view.cond_total[e];
            std::vector<State> comp2(static_cast<std::size_t>(n));
            const auto& map = maps[static_cast<std::size_t>(i)];
            for (State x = 0; x < n; ++x)
              comp2[static_cast<std::size_t>(x)] = comp[static_cast<std::size_t>(
                  map[static_cast<std::size_t>(x)])];
            extend(d + 1, x_next, comp2, w2);
          }
        }
      };

  std::vector<State> identity(static_cast<std::size_t>(n));
  std::iota(identity.begin(), identity.end(), 0);
  for (State x0 = 0; x0 < n; ++x0)
    if (chain.pi[static_cast<std::size_t>(x0)] != 0)
      extend(0, x0, identity, chain.pi[static_cast<std::size_t>(x0)]);
  return out;
}

// ---------------------------------------------------------------------------

CftpTLaw exact_cftp_t_law(const TransitionRule& rule, int t_max, const OracleOptions& opts) {
  if (t_max < 0) throw Error("BadArgument", "t_max must be nonnegative");
  const AtomView view = atomize(rule);
  const int n = view.n;
  const CompDetector det = make_comp_detector(view, opts.tracker);
  const auto& weights = view.rule->weights();
  const auto& maps = view.rule->maps();

  CftpTLaw out;
  long nodes = 0;

  std::function<void(int, const std::vector<State>&, const Rational&)> extend =
      [&](int d, const std::vector<State>& comp, const Rational& w) {
        if (++nodes > opts.cap)
          throw EnumerationTooLarge("outcome enumeration exceeds the cap");
        if (det.detect(comp)) {
          out.law[d] += w;
          return;
        }
        if (d == t_max) {
          out.residual += w;
          return;
        }
        for (std::int32_t i = 0; i < view.rule->atom_count(); ++i) {
          std::vector<State> comp2(static_cast<std::size_t>(n));
          const auto& map = maps[static_cast<std::size_t>(i)];
          for (State x = 0; x < n; ++x)
            comp2[static_cast<std::size_t>(x)] =
                comp[static_cast<std::size_t>(map[static_cast<std::size_t>(x)])];
          extend(d + 1, comp2, w * weights[static_cast<std::size_t>(i)]);
        }
      };

  std::vector<State> identity(static_cast<std::size_t>(n));
  std::iota(identity.begin(), identity.end(), 0);
  extend(0, identity, Rational(1));
  return out;
}

}  // namespace psamp
