#include "psamp/fill.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "psamp/model_zoo.hpp"

namespace psamp {

namespace {

constexpr std::int64_t kWindowCap = std::int64_t(1) << 20;

State draw_seed(const SeedSpec& seed, const ReversedKernel& rev, RngStream& rng) {
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
  return z;
}

}  // namespace

RunRecord fill_attempt(const TransitionRule& rule, const ReversedKernel& rev,
                       const DetectionProcess& tracker, int t, const SeedSpec& seed,
                       RngStream& rng) {
  if (t < 0) throw Error("BadArgument", "horizon must be nonnegative");
  if (rule.n() != rev.n()) throw Error("BadArgument", "rule and reversal disagree on size");

  RunRecord rec;
  rec.horizon = t;
  rec.trajectory.resize(static_cast<std::size_t>(t) + 1);
  rec.trajectory[static_cast<std::size_t>(t)] = draw_seed(seed, rev, rng);
  for (int s = t; s >= 1; --s)
    rec.trajectory[static_cast<std::size_t>(s - 1)] =
        step_backward(rev, rec.trajectory[static_cast<std::size_t>(s)], rng);
  rec.drivers = impute_sequence(rule, rec.trajectory, rng).drivers;

  const DetectionResult result = run_detection(tracker, rec.drivers);
  rec.accepted = result.detected;
  rec.first_hit = result.first_hit;
  rec.markov_steps = t + result.chain_steps;
  rec.cumulative_markov_steps = rec.markov_steps;
  if (rec.accepted) rec.output = rec.trajectory[0];
  return rec;
}

FillResult fill_sample(const TransitionRule& rule, const ReversedKernel& rev,
                       const DetectionProcess& tracker, const FillConfig& config) {
  if (config.horizon < 0) throw Error("BadArgument", "horizon must be nonnegative");
  if (config.max_attempts < 0) throw Error("BadArgument", "max_attempts must be nonnegative");

  std::vector<RunRecord> attempts;
  long cumulative = 0;
  std::int64_t t = config.horizon;
  for (int k = 0; k < config.max_attempts; ++k) {
    RngStream stream(config.rng_seed, static_cast<std::uint64_t>(k));
    RunRecord rec = fill_attempt(rule, rev, tracker, static_cast<int>(t), config.seed, stream);
    rec.attempt_index = k;
    cumulative += rec.markov_steps;
    rec.cumulative_markov_steps = cumulative;
    const bool accepted = rec.accepted;
    attempts.push_back(std::move(rec));
    if (accepted) return {*attempts.back().output, std::move(attempts)};
    if (config.retry == RetryPolicy::Doubling) t = std::min(t * 2, kWindowCap);
  }
  throw MaxAttemptsExceeded("no acceptance within " + std::to_string(config.max_attempts) +
                                " attempts",
                            std::move(attempts));
}

std::vector<CurvePoint> acceptance_curve(int n, std::span<const double> c_grid,
                                         long replications, std::uint64_t seed) {
  if (replications < 1) throw Error("BadArgument", "need at least one replication");
  const ChainModel model = random_walk_chain(n);
  const auto tracker = monotone_bounding_process(model.monotone_rule);
  const SeedSpec z = SeedSpec::fixed(0);

  std::vector<CurvePoint> out;
  out.reserve(c_grid.size());
  for (std::size_t g = 0; g < c_grid.size(); ++g) {
    const double c = c_grid[g];
    if (!(c > 0)) throw Error("BadArgument", "grid values must be positive");
    const std::int64_t t = std::min<std::int64_t>(
        std::max<std::int64_t>(1, static_cast<std::int64_t>(
                                      std::ceil(c * static_cast<double>(n) * n))),
        kWindowCap);
    CurvePoint point;
    point.c = c;
    point.t = static_cast<int>(t);
    point.replications = replications;
    for (long r = 0; r < replications; ++r) {
      RngStream rng(seed, static_cast<std::uint64_t>(g) * static_cast<std::uint64_t>(replications) +
                              static_cast<std::uint64_t>(r));
      const RunRecord rec = fill_attempt(*model.monotone_rule, model.reversed, *tracker,
                                         point.t, z, rng);
      if (rec.accepted) ++point.accepted;
    }
    point.p_hat = static_cast<double>(point.accepted) / static_cast<double>(replications);
    point.std_error =
        std::sqrt(point.p_hat * (1.0 - point.p_hat) / static_cast<double>(replications));
    out.push_back(point);
  }
  return out;
}

}  // namespace psamp
