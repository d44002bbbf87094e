#include "psamp/cftp.hpp"

#include <algorithm>
#include <string>

#include "psamp/oracle.hpp"

namespace psamp {

namespace {

std::vector<Driver> window_oldest_first(const DriverLog& log, std::int64_t t) {
  // Depth d holds the driver at time -d, so width t runs depths t-1 .. 0.
  std::vector<Driver> seq;
  seq.reserve(static_cast<std::size_t>(t));
  for (std::int64_t d = t - 1; d >= 0; --d)
    seq.push_back(log.by_depth[static_cast<std::size_t>(d)]);
  return seq;
}

}  // namespace

BackwardRun cftp_sample(const TransitionRule& rule, const DetectionProcess& tracker,
                        RngStream& rng, std::int64_t window_cap) {
  if (window_cap < 1) throw Error("BadArgument", "window cap must be positive");

  BackwardRun run;
  {
    // Width 0 succeeds only when detection needs no steps at all.
    const DetectionState d0 = tracker.initial();
    if (tracker.in_target(d0)) {
      run.T = 0;
      run.output = 0;
      return run;
    }
  }

  for (std::int64_t t = 1; t <= window_cap; t *= 2) {
    while (static_cast<std::int64_t>(run.log.by_depth.size()) < t)
      run.log.by_depth.push_back(rule.sample_driver(rng));
    const std::vector<Driver> seq = window_oldest_first(run.log, t);
    const DetectionResult result = run_detection(tracker, seq);
    run.chain_steps += result.chain_steps;
    if (result.detected) {
      run.T = t;
      // Replay the whole window; detection certifies the composed map is
      // constant, so any start state lands on the common value.
      State x = 0;
      for (const Driver& u : seq) x = rule.apply(x, u);
      run.chain_steps += t;
      run.output = x;
      return run;
    }
    if (t == window_cap) break;
  }
  throw WindowLimitExceeded("no coalescence within window " + std::to_string(window_cap));
}

BackwardRun fill_infinite_window(const TransitionRule& rule, const ReversedKernel& rev,
                                 const DetectionProcess& tracker, const SeedSpec& seed,
                                 CheckPolicy policy, RngStream& rng, std::int64_t window_cap) {
  if (window_cap < 0) throw Error("BadArgument", "window cap must be nonnegative");
  if (rule.n() != rev.n()) throw Error("BadArgument", "rule and reversal disagree on size");

  BackwardRun run;
  {
    State z;
    if (const auto* fixed = std::get_if<State>(&seed.v)) {
      z = *fixed;
      if (z < 0 || z >= rev.n())
        throw Error("BadArgument", "seed state " + std::to_string(z) + " out of range");
    } else {
      const auto& p = std::get<ProbabilityVector>(seed.v);
      if (p.size() != rev.n())
        throw Error("BadArgument", "seed distribution has wrong length");
      z = static_cast<State>(rng.sample_index(p.w));
    }
    if (rev.pi()[z] <= 0.0)
      throw ZeroMassState("seed lands on state " + std::to_string(z) +
                          " of zero stationary mass");
    run.trajectory.push_back(z);
  }

  {
    const DetectionState d0 = tracker.initial();
    if (tracker.in_target(d0)) {
      run.T = 0;
      run.output = run.trajectory[0];
      run.W = run.trajectory[0];
      return run;
    }
  }

  const auto is_candidate = [policy](std::int64_t t) {
    return policy == CheckPolicy::EveryStep || (t & (t - 1)) == 0;
  };

  for (std::int64_t d = 1; d <= window_cap; ++d) {
    const State newest = run.trajectory.back();
    const State older = step_backward(rev, newest, rng);
    run.log.by_depth.push_back(rule.impute_driver(older, newest, rng));
    run.trajectory.push_back(older);
    run.chain_steps += 1;
    if (!is_candidate(d)) continue;
    const std::vector<Driver> seq = window_oldest_first(run.log, d);
    const DetectionResult result = run_detection(tracker, seq);
    run.chain_steps += result.chain_steps;
    if (result.detected) {
      run.T = d;
      run.output = run.trajectory[0];
      run.W = run.trajectory[static_cast<std::size_t>(d)];
      return run;
    }
  }
  throw WindowLimitExceeded("no coalescence within window " + std::to_string(window_cap));
}

bool ConnectionReport::all_ok() const {
  for (const auto& row : pi_average)
    if (!row.equal) return false;
  return joint_factorizes && t_law_matches;
}

ConnectionReport connection_diagnostic(const TransitionRule& rule, int t_max) {
  if (t_max < 0) throw Error("BadArgument", "t_max must be nonnegative");
  ConnectionReport report;
  for (int t = 0; t <= t_max; ++t) {
    const PiAverageReport row = pi_average_check(rule, t);
    report.pi_average.push_back({t, row.lhs, row.rhs, row.equal});
  }
  const JointTW joint = exact_joint_T_W(rule, t_max);
  report.joint_factorizes = joint.factorizes();
  const CftpTLaw law = exact_cftp_t_law(rule, t_max);
  report.t_law = law.law;
  report.residual = law.residual;
  report.t_law_matches =
      joint.t_marginal() == law.law && joint.residual == law.residual;
  return report;
}

}  // namespace psamp
