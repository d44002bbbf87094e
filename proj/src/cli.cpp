#include "psamp/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <string_view>
#include <thread>

#include "psamp/cftp.hpp"
#include "psamp/chain_spec.hpp"
#include "psamp/fill.hpp"
#include "psamp/model_zoo.hpp"
#include "psamp/oracle.hpp"
#include "psamp/record_io.hpp"
#include "psamp/stats.hpp"

namespace psamp {

namespace {

using nlohmann::ordered_json;

double rounded(double x) { return std::strtod(format_double(x).c_str(), nullptr); }

// ---------------------------------------------------------------------------
// Chain selection shared across subcommands

struct ChainOpts {
  std::string preset;
  std::string spec_path;
  std::string update = "monotone";
  std::string tracker = "auto";
};

struct ChainSetup {
  std::string name;
  std::shared_ptr<const TransitionRule> rule;
  std::shared_ptr<const DetectionProcess> tracker;
  std::optional<ReversedKernel> reversed;
  bool is_mtf = false;
};

void add_chain_flags(CLI::App* cmd, ChainOpts& opts, bool with_update = true) {
  auto* preset = cmd->add_option("--preset", opts.preset,
                                 "built-in chain: toy | walk:N | mtf:N (mtf: cftp only)");
  cmd->add_option("--spec", opts.spec_path, "chain spec JSON file")->excludes(preset);
  if (with_update)
    cmd->add_option("--update", opts.update,
                    "update rule for presets: monotone | independent | inverse-cdf")
        ->check(CLI::IsMember({"monotone", "independent", "inverse-cdf"}));
  cmd->add_option("--tracker", opts.tracker,
                  "coalescence detector: auto | full | bounding | requests")
      ->check(CLI::IsMember({"auto", "full", "bounding", "requests"}));
}

long parse_preset_arg(const std::string& preset, const std::string& head) {
  const std::string tail = preset.substr(head.size());
  try {
    std::size_t used = 0;
    const long v = std::stol(tail, &used);
    if (used != tail.size()) throw std::invalid_argument(tail);
    return v;
  } catch (const std::exception&) {
    throw Error("BadArgument", "malformed preset '" + preset + "'");
  }
}

ChainSetup build_setup(const ChainOpts& opts, bool allow_mtf, bool need_reversed) {
  ChainSetup setup;
  if (!opts.spec_path.empty()) {
    ChainSpec spec = load_chain_spec(opts.spec_path);
    setup.name = opts.spec_path;
    if (spec.rule) {
      setup.rule = spec.rule;
    } else if (opts.update == "independent") {
      setup.rule = make_independent_transitions_rule(spec.kernel);
    } else if (opts.update == "inverse-cdf") {
      setup.rule = make_inverse_cdf_rule(spec.kernel);
    } else {
      throw Error("BadArgument",
                  "spec file has no rule; pass --update independent or inverse-cdf");
    }
  } else {
    const std::string preset = opts.preset.empty() ? "toy" : opts.preset;
    setup.name = preset;
    if (preset.rfind("mtf:", 0) == 0) {
      if (!allow_mtf)
        throw Error("BadArgument", "preset '" + preset + "' is only valid for cftp");
      const long records = parse_preset_arg(preset, "mtf:");
      if (records < 1 || records > 12)
        throw Error("BadArgument", "mtf preset needs between 1 and 12 records");
      std::vector<double> weights(static_cast<std::size_t>(records),
                                  1.0 / static_cast<double>(records));
      auto [rule, detector] = mtf_process(std::move(weights));
      setup.rule = rule;
      setup.tracker = detector;
      setup.is_mtf = true;
    } else {
      ChainModel model;
      if (preset == "toy") {
        model = toy_chain();
      } else if (preset.rfind("walk:", 0) == 0) {
        model = random_walk_chain(static_cast<int>(parse_preset_arg(preset, "walk:")));
      } else {
        throw Error("BadArgument", "unknown preset '" + preset + "'");
      }
      if (opts.update == "independent") {
        setup.rule = model.independent_rule;
      } else if (opts.update == "inverse-cdf") {
        setup.rule = make_inverse_cdf_rule(model.kernel);
      } else {
        setup.rule = model.monotone_rule;
      }
      setup.reversed = std::move(model.reversed);
    }
  }

  if (!setup.reversed && !setup.is_mtf && need_reversed)
    setup.reversed = reverse_kernel(setup.rule->kernel());
  if (setup.is_mtf && need_reversed)
    throw Error("BadArgument", "the mtf preset has no reversed-chain support");

  if (!setup.tracker || opts.tracker != "auto") {
    const std::string kind = opts.tracker == "auto" ? "full" : opts.tracker;
    if (kind == "requests") {
      const auto* mtf = dynamic_cast<const MtfRule*>(setup.rule.get());
      if (!mtf) throw Error("BadArgument", "the requests tracker needs the mtf preset");
      setup.tracker = std::make_shared<const MtfDetectionProcess>(mtf->records());
    } else if (kind == "bounding") {
      setup.tracker = monotone_bounding_process(setup.rule);
    } else {
      setup.tracker = full_tracking_process(setup.rule);
    }
  }
  return setup;
}

TrackerKind oracle_tracker(const std::string& tracker) {
  if (tracker == "bounding") return TrackerKind::MonotoneBounding;
  if (tracker == "auto" || tracker == "full") return TrackerKind::FullTracking;
  throw Error("BadArgument", "exact reports support --tracker full or bounding");
}

// ---------------------------------------------------------------------------
// Seeds, parallel replication, shared rendering

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("PS_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
      throw Error("BadArgument", "PS_SEED is not an unsigned integer");
    return static_cast<std::uint64_t>(v);
  }
  return 0;
}

void parallel_for(long count, int jobs, const std::function<void(long)>& body) {
  if (jobs < 1) throw Error("BadArgument", "jobs must be positive");
  if (jobs == 1 || count <= 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<long>(jobs, count));
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

ordered_json counts_json(const std::map<State, long>& counts) {
  ordered_json j = ordered_json::object();
  for (const auto& [state, count] : counts) j[std::to_string(state)] = count;
  return j;
}

ordered_json histogram_json(const std::map<std::int64_t, long>& hist) {
  ordered_json j = ordered_json::object();
  for (const auto& [t, count] : hist) j[std::to_string(t)] = count;
  return j;
}

void write_counts_csv(std::ostream& out, const std::map<State, long>& counts) {
  out << "state,count\n";
  for (const auto& [state, count] : counts) out << state << "," << count << "\n";
}

void maybe_write_file(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) return;
  std::ofstream file(path);
  if (!file) throw Error("IoError", "cannot open '" + path + "' for writing");
  fn(file);
}

// ---------------------------------------------------------------------------
// fill

struct FillOpts {
  ChainOpts chain;
  int horizon = 1;
  bool fixed_t = false;
  std::optional<State> seed_state;
  long reps = 1;
  int max_attempts = 30;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string log_path;
  std::string csv_path;
};

int cmd_fill(const FillOpts& o, std::ostream& out) {
  const ChainSetup setup = build_setup(o.chain, false, true);
  const std::uint64_t seed = resolve_seed(o.seed);
  const SeedSpec terminal = o.seed_state ? SeedSpec::fixed(*o.seed_state)
                                         : SeedSpec::distribution(setup.rule->kernel().pi());

  std::vector<std::optional<FillResult>> results(static_cast<std::size_t>(o.reps));
  std::vector<std::vector<RunRecord>> failed_logs(static_cast<std::size_t>(o.reps));
  parallel_for(o.reps, o.jobs, [&](long r) {
    FillConfig cfg;
    cfg.horizon = o.horizon;
    cfg.seed = terminal;
    cfg.retry = o.fixed_t ? RetryPolicy::FixedT : RetryPolicy::Doubling;
    cfg.max_attempts = o.max_attempts;
    cfg.rng_seed = derive_seed(seed, static_cast<std::uint64_t>(r));
    try {
      results[static_cast<std::size_t>(r)] =
          fill_sample(*setup.rule, *setup.reversed, *setup.tracker, cfg);
    } catch (const MaxAttemptsExceeded& e) {
      failed_logs[static_cast<std::size_t>(r)] = e.attempts;
    }
  });

  std::map<State, long> counts;
  long completed = 0;
  long failed = 0;
  double attempt_sum = 0;
  double step_sum = 0;
  for (const auto& res : results) {
    if (!res) {
      ++failed;
      continue;
    }
    ++completed;
    ++counts[res->output];
    attempt_sum += static_cast<double>(res->attempts.size());
    step_sum += static_cast<double>(res->attempts.back().cumulative_markov_steps);
  }

  maybe_write_file(o.log_path, [&](std::ostream& log) {
    for (std::size_t r = 0; r < results.size(); ++r) {
      if (results[r])
        write_run_records(log, results[r]->attempts);
      else
        write_run_records(log, failed_logs[r]);
    }
  });
  maybe_write_file(o.csv_path, [&](std::ostream& csv) { write_counts_csv(csv, counts); });

  ordered_json j;
  j["command"] = "fill";
  j["chain"] = setup.name;
  j["n"] = setup.rule->n();
  j["replications"] = o.reps;
  j["seed"] = seed;
  j["horizon"] = o.horizon;
  j["retry"] = o.fixed_t ? "fixed" : "doubling";
  j["max_attempts"] = o.max_attempts;
  j["completed"] = completed;
  j["failed"] = failed;
  j["counts"] = counts_json(counts);
  j["mean_attempts"] = completed ? rounded(attempt_sum / static_cast<double>(completed)) : 0.0;
  j["mean_markov_steps"] = completed ? rounded(step_sum / static_cast<double>(completed)) : 0.0;
  out << j.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// cftp / fill-inf

struct BackwardOpts {
  ChainOpts chain;
  long reps = 1;
  std::int64_t window_cap = std::int64_t(1) << 20;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string log_path;
  std::string csv_path;
  // fill-inf only
  std::string policy = "pow2";
  std::optional<State> seed_state;
};

int cmd_backward(const BackwardOpts& o, std::ostream& out, bool infinite_window) {
  const ChainSetup setup = build_setup(o.chain, !infinite_window, infinite_window);
  const std::uint64_t seed = resolve_seed(o.seed);
  const CheckPolicy policy =
      o.policy == "pow2" ? CheckPolicy::PowersOfTwo : CheckPolicy::EveryStep;
  const SeedSpec start = o.seed_state ? SeedSpec::fixed(*o.seed_state)
                                      : SeedSpec::distribution(setup.rule->kernel().pi());

  std::vector<std::optional<BackwardRun>> runs(static_cast<std::size_t>(o.reps));
  parallel_for(o.reps, o.jobs, [&](long r) {
    RngStream rng(seed, static_cast<std::uint64_t>(r));
    try {
      runs[static_cast<std::size_t>(r)] =
          infinite_window
              ? fill_infinite_window(*setup.rule, *setup.reversed, *setup.tracker, start,
                                     policy, rng, o.window_cap)
              : cftp_sample(*setup.rule, *setup.tracker, rng, o.window_cap);
    } catch (const WindowLimitExceeded&) {
      runs[static_cast<std::size_t>(r)].reset();
    }
  });

  std::map<State, long> counts;
  std::map<std::int64_t, long> t_hist;
  long completed = 0;
  long failed = 0;
  double step_sum = 0;
  for (const auto& run : runs) {
    if (!run) {
      ++failed;
      continue;
    }
    ++completed;
    ++counts[infinite_window ? *run->W : run->output];
    ++t_hist[run->T];
    step_sum += static_cast<double>(run->chain_steps);
  }

  maybe_write_file(o.log_path, [&](std::ostream& log) {
    for (const auto& run : runs)
      if (run)
        write_backward_runs(log, std::span<const BackwardRun>(&*run, 1),
                            infinite_window ? std::string_view(o.policy) : std::string_view());
  });
  maybe_write_file(o.csv_path, [&](std::ostream& csv) { write_counts_csv(csv, counts); });

  ordered_json j;
  j["command"] = infinite_window ? "fill-inf" : "cftp";
  j["chain"] = setup.name;
  j["n"] = setup.rule->n();
  j["replications"] = o.reps;
  j["seed"] = seed;
  j["window_cap"] = o.window_cap;
  if (infinite_window) j["policy"] = o.policy;
  j["completed"] = completed;
  j["failed"] = failed;
  j[infinite_window ? "w_counts" : "counts"] = counts_json(counts);
  j["t_histogram"] = histogram_json(t_hist);
  j["mean_chain_steps"] = completed ? rounded(step_sum / static_cast<double>(completed)) : 0.0;
  out << j.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// enumerate

struct EnumerateOpts {
  ChainOpts chain;
  std::string report = "fill";
  int horizon = 1;
  State z = 0;
  int t_max = 4;
};

ordered_json rational_list(const std::vector<Rational>& xs) {
  ordered_json j = ordered_json::array();
  for (const Rational& x : xs) j.push_back(format_rational(x));
  return j;
}

int cmd_enumerate(const EnumerateOpts& o, std::ostream& out) {
  const ChainSetup setup = build_setup(o.chain, false, false);
  OracleOptions opts;
  opts.tracker = oracle_tracker(o.chain.tracker);

  ordered_json j;
  j["command"] = "enumerate";
  j["chain"] = setup.name;
  j["report"] = o.report;
  if (o.report == "fill") {
    const AcceptanceReport rep = exact_fill_report(*setup.rule, o.horizon, o.z, opts);
    j["t"] = o.horizon;
    j["z"] = o.z;
    j["p_accept"] = format_rational(rep.p_accept);
    j["conditional_output"] = rep.conditional_output
                                  ? rational_list(rep.conditional_output->w)
                                  : ordered_json(nullptr);
    j["outcome_count"] = rep.outcome_count;
  } else if (o.report == "forward") {
    j["t"] = o.horizon;
    j["p"] = format_rational(exact_forward_coalescence(*setup.rule, o.horizon, opts));
  } else if (o.report == "pi-average") {
    const PiAverageReport rep = pi_average_check(*setup.rule, o.horizon, opts);
    j["t"] = o.horizon;
    j["lhs"] = format_rational(rep.lhs);
    j["rhs"] = format_rational(rep.rhs);
    j["per_state"] = rational_list(rep.per_state);
    j["equal"] = rep.equal;
  } else if (o.report == "joint") {
    const JointTW rep = exact_joint_T_W(*setup.rule, o.t_max, opts);
    j["t_max"] = o.t_max;
    ordered_json mass = ordered_json::array();
    for (const auto& [key, p] : rep.mass) {
      ordered_json cell;
      cell["t"] = key.first;
      cell["w"] = key.second;
      cell["p"] = format_rational(p);
      mass.push_back(std::move(cell));
    }
    j["mass"] = std::move(mass);
    j["residual"] = format_rational(rep.residual);
    j["factorizes"] = rep.factorizes();
    ordered_json marginal = ordered_json::object();
    for (const auto& [t, p] : rep.t_marginal()) marginal[std::to_string(t)] = format_rational(p);
    j["t_marginal"] = std::move(marginal);
  } else if (o.report == "cftp-law") {
    const CftpTLaw rep = exact_cftp_t_law(*setup.rule, o.t_max, opts);
    j["t_max"] = o.t_max;
    ordered_json law = ordered_json::object();
    for (const auto& [t, p] : rep.law) law[std::to_string(t)] = format_rational(p);
    j["law"] = std::move(law);
    j["residual"] = format_rational(rep.residual);
  } else {
    throw Error("BadArgument", "unknown report '" + o.report + "'");
  }
  out << j.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// check

struct CheckOpts {
  ChainOpts chain;
  int t_max = 4;
  bool no_connection = false;
};

int cmd_check(const CheckOpts& o, std::ostream& out) {
  const ChainSetup setup = build_setup(o.chain, false, false);
  const DiscreteKernel& kernel = setup.rule->kernel();
  const int n = kernel.n();

  double row_residual = 0;
  for (State x = 0; x < n; ++x) {
    double sum = 0;
    for (State y = 0; y < n; ++y) sum += kernel.at(x, y);
    row_residual = std::max(row_residual, std::fabs(sum - 1.0));
  }
  double stat_residual = 0;
  for (State y = 0; y < n; ++y) {
    double mass = 0;
    for (State x = 0; x < n; ++x) mass += kernel.pi()[x] * kernel.at(x, y);
    stat_residual = std::max(stat_residual, std::fabs(mass - kernel.pi()[y]));
  }

  ordered_json j;
  j["command"] = "check";
  j["chain"] = setup.name;
  j["n"] = n;
  j["row_residual"] = rounded(row_residual);
  j["stationarity_residual"] = rounded(stat_residual);
  j["exact"] = kernel.exact();

  ordered_json mono;
  try {
    const MonotoneReport rep = is_monotone(*setup.rule);
    mono["verdict"] = rep.verdict == Trilean::True    ? "true"
                      : rep.verdict == Trilean::False ? "false"
                                                      : "unknown";
    mono["detail"] = rep.detail;
  } catch (const NoOrder&) {
    mono["verdict"] = "unknown";
    mono["detail"] = "state space carries no partial order";
  }
  j["monotone"] = std::move(mono);

  if (o.no_connection) {
    j["connection"] = nullptr;
  } else {
    try {
      const ConnectionReport rep = connection_diagnostic(*setup.rule, o.t_max);
      ordered_json c;
      c["t_max"] = o.t_max;
      ordered_json rows = ordered_json::array();
      for (const auto& row : rep.pi_average) {
        ordered_json r;
        r["t"] = row.t;
        r["lhs"] = format_rational(row.lhs);
        r["rhs"] = format_rational(row.rhs);
        r["equal"] = row.equal;
        rows.push_back(std::move(r));
      }
      c["pi_average"] = std::move(rows);
      c["joint_factorizes"] = rep.joint_factorizes;
      c["t_law_matches"] = rep.t_law_matches;
      ordered_json law = ordered_json::object();
      for (const auto& [t, p] : rep.t_law) law[std::to_string(t)] = format_rational(p);
      c["t_law"] = std::move(law);
      c["residual"] = format_rational(rep.residual);
      c["all_ok"] = rep.all_ok();
      j["connection"] = std::move(c);
    } catch (const Error& e) {
      ordered_json c;
      c["skipped"] = e.code();
      j["connection"] = std::move(c);
    }
  }
  out << j.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// curve

struct CurveOpts {
  int n = 8;
  std::vector<double> grid = {0.25, 0.5, 1.0, 2.0};
  long reps = 200;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string csv_path;
};

int cmd_curve(const CurveOpts& o, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(o.seed);
  // acceptance_curve derives one stream per (grid point, replication), so a
  // parallel split over grid points keeps output independent of scheduling.
  std::vector<std::vector<CurvePoint>> parts(o.grid.size());
  parallel_for(static_cast<long>(o.grid.size()), o.jobs, [&](long g) {
    const std::span<const double> one(&o.grid[static_cast<std::size_t>(g)], 1);
    auto points = acceptance_curve(o.n, one, o.reps, derive_seed(seed, static_cast<std::uint64_t>(g)));
    parts[static_cast<std::size_t>(g)] = std::move(points);
  });

  std::vector<CurvePoint> points;
  for (auto& part : parts)
    for (const CurvePoint& p : part) points.push_back(p);

  maybe_write_file(o.csv_path, [&](std::ostream& csv) {
    csv << "c,t,accepted,replications,p_hat,std_error\n";
    for (const CurvePoint& p : points)
      csv << format_double(p.c) << "," << p.t << "," << p.accepted << "," << p.replications
          << "," << format_double(p.p_hat) << "," << format_double(p.std_error) << "\n";
  });

  ordered_json j;
  j["command"] = "curve";
  j["n"] = o.n;
  j["replications"] = o.reps;
  j["seed"] = seed;
  ordered_json arr = ordered_json::array();
  for (const CurvePoint& p : points) {
    ordered_json pt;
    pt["c"] = rounded(p.c);
    pt["t"] = p.t;
    pt["accepted"] = p.accepted;
    pt["replications"] = p.replications;
    pt["p_hat"] = rounded(p.p_hat);
    pt["std_error"] = rounded(p.std_error);
    arr.push_back(std::move(pt));
  }
  j["points"] = std::move(arr);
  out << j.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// test-interrupt

struct InterruptOpts {
  ChainOpts chain;
  std::string sampler = "fill";
  int horizon = 3;
  long reps = 20000;
  int buckets = 4;
  int max_attempts = 1000;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string records_path;
  std::string csv_path;
};

std::vector<std::pair<State, long>> sample_interrupt_pairs(const InterruptOpts& o,
                                                           std::uint64_t seed,
                                                           std::string& source) {
  const bool use_fill = o.sampler == "fill";
  const ChainSetup setup = build_setup(o.chain, !use_fill, use_fill);
  source = setup.name;

  std::vector<std::optional<std::pair<State, long>>> raw(static_cast<std::size_t>(o.reps));
  parallel_for(o.reps, o.jobs, [&](long r) {
    if (use_fill) {
      FillConfig cfg;
      cfg.horizon = o.horizon;
      cfg.seed = SeedSpec::distribution(setup.rule->kernel().pi());
      cfg.retry = RetryPolicy::FixedT;
      cfg.max_attempts = o.max_attempts;
      cfg.rng_seed = derive_seed(seed, static_cast<std::uint64_t>(r));
      try {
        const FillResult res = fill_sample(*setup.rule, *setup.reversed, *setup.tracker, cfg);
        raw[static_cast<std::size_t>(r)] = {res.output,
                                            res.attempts.back().cumulative_markov_steps};
      } catch (const MaxAttemptsExceeded&) {
      }
    } else {
      RngStream rng(seed, static_cast<std::uint64_t>(r));
      try {
        const BackwardRun run = cftp_sample(*setup.rule, *setup.tracker, rng);
        raw[static_cast<std::size_t>(r)] = {run.output, static_cast<long>(run.T)};
      } catch (const WindowLimitExceeded&) {
      }
    }
  });

  std::vector<std::pair<State, long>> pairs;
  pairs.reserve(raw.size());
  for (const auto& p : raw)
    if (p) pairs.push_back(*p);
  return pairs;
}

std::vector<std::pair<State, long>> read_interrupt_pairs(const InterruptOpts& o,
                                                         std::string& source) {
  std::ifstream in(o.records_path);
  if (!in) throw Error("IoError", "cannot open '" + o.records_path + "'");
  source = o.records_path;
  std::vector<std::pair<State, long>> pairs;
  if (o.sampler == "fill") {
    for (const RunRecord& rec : read_run_records(in))
      if (rec.accepted && rec.output) pairs.emplace_back(*rec.output, rec.cumulative_markov_steps);
  } else {
    for (const BackwardRun& run : read_backward_runs(in))
      pairs.emplace_back(run.output, static_cast<long>(run.T));
  }
  return pairs;
}

int cmd_test_interrupt(const InterruptOpts& o, std::ostream& out) {
  const bool use_fill = o.sampler == "fill";
  const std::uint64_t seed = resolve_seed(o.seed);
  std::string source;
  const std::vector<std::pair<State, long>> pairs = o.records_path.empty()
                                                        ? sample_interrupt_pairs(o, seed, source)
                                                        : read_interrupt_pairs(o, source);

  const IndependenceReport rep = independence_test(pairs, o.buckets);

  maybe_write_file(o.csv_path, [&](std::ostream& csv) {
    csv << "state";
    for (long upper : rep.bucket_upper) csv << ",le_" << upper;
    csv << "\n";
    for (std::size_t row = 0; row < rep.row_states.size(); ++row) {
      csv << rep.row_states[row];
      for (long cell : rep.table[row]) csv << "," << cell;
      csv << "\n";
    }
  });

  ordered_json j;
  j["command"] = "test-interrupt";
  j["sampler"] = o.sampler;
  j["chain"] = source;
  j["runtime"] = use_fill ? "cumulative_markov_steps" : "window_width";
  j["pairs"] = static_cast<long>(pairs.size());
  j["buckets"] = o.buckets;
  j["seed"] = seed;
  j["row_states"] = rep.row_states;
  j["bucket_upper"] = rep.bucket_upper;
  j["table"] = rep.table;
  j["statistic"] = rounded(rep.statistic);
  j["dof"] = rep.dof;
  j["p_value"] = rounded(rep.p_value);
  ordered_json rej = ordered_json::object();
  for (const auto& [level, reject] : rep.reject_at) rej[level] = reject;
  j["reject_at"] = std::move(rej);
  out << j.dump() << "\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"perfect sampling for finite-state Markov chains"};
  app.require_subcommand(1);

  FillOpts fill_opts;
  auto* fill_cmd = app.add_subcommand("fill", "interruptible rejection sampler");
  add_chain_flags(fill_cmd, fill_opts.chain);
  fill_cmd->add_option("-t,--horizon", fill_opts.horizon, "initial window width")
      ->check(CLI::NonNegativeNumber);
  fill_cmd->add_flag("--fixed-t", fill_opts.fixed_t, "retry at the same width instead of doubling");
  fill_cmd->add_option("--seed-state", fill_opts.seed_state,
                       "fixed terminal state (default: draw from pi)");
  fill_cmd->add_option("--reps", fill_opts.reps, "replications")->check(CLI::PositiveNumber);
  fill_cmd->add_option("--max-attempts", fill_opts.max_attempts, "attempt budget per sample")
      ->check(CLI::NonNegativeNumber);
  fill_cmd->add_option("--seed", fill_opts.seed, "rng seed (PS_SEED otherwise)");
  fill_cmd->add_option("--jobs", fill_opts.jobs, "worker threads")->check(CLI::PositiveNumber);
  fill_cmd->add_option("--log", fill_opts.log_path, "write attempt records (JSON lines)");
  fill_cmd->add_option("--csv", fill_opts.csv_path, "write the output counts as CSV here");

  BackwardOpts cftp_opts;
  auto* cftp_cmd = app.add_subcommand("cftp", "coupling from the past");
  add_chain_flags(cftp_cmd, cftp_opts.chain);
  cftp_cmd->add_option("--reps", cftp_opts.reps, "replications")->check(CLI::PositiveNumber);
  cftp_cmd->add_option("--window-cap", cftp_opts.window_cap, "largest window width");
  cftp_cmd->add_option("--seed", cftp_opts.seed, "rng seed (PS_SEED otherwise)");
  cftp_cmd->add_option("--jobs", cftp_opts.jobs, "worker threads")->check(CLI::PositiveNumber);
  cftp_cmd->add_option("--log", cftp_opts.log_path, "write backward runs (JSON lines)");
  cftp_cmd->add_option("--csv", cftp_opts.csv_path, "write the output counts as CSV here");

  BackwardOpts inf_opts;
  auto* inf_cmd = app.add_subcommand("fill-inf", "infinite-window rejection sampler");
  add_chain_flags(inf_cmd, inf_opts.chain);
  inf_cmd->add_option("--policy", inf_opts.policy, "window checks: every | pow2")
      ->check(CLI::IsMember({"every", "pow2"}));
  inf_cmd->add_option("--seed-state", inf_opts.seed_state,
                      "fixed time-0 state (default: draw from pi)");
  inf_cmd->add_option("--reps", inf_opts.reps, "replications")->check(CLI::PositiveNumber);
  inf_cmd->add_option("--window-cap", inf_opts.window_cap, "largest window width");
  inf_cmd->add_option("--seed", inf_opts.seed, "rng seed (PS_SEED otherwise)");
  inf_cmd->add_option("--jobs", inf_opts.jobs, "worker threads")->check(CLI::PositiveNumber);
  inf_cmd->add_option("--log", inf_opts.log_path, "write backward runs (JSON lines)");
  inf_cmd->add_option("--csv", inf_opts.csv_path, "write the far-end counts as CSV here");

  EnumerateOpts enum_opts;
  auto* enum_cmd = app.add_subcommand("enumerate", "exact rational reports");
  add_chain_flags(enum_cmd, enum_opts.chain);
  enum_cmd->add_option("--report", enum_opts.report,
                       "fill | forward | pi-average | joint | cftp-law")
      ->check(CLI::IsMember({"fill", "forward", "pi-average", "joint", "cftp-law"}));
  enum_cmd->add_option("-t,--horizon", enum_opts.horizon, "window width")
      ->check(CLI::NonNegativeNumber);
  enum_cmd->add_option("-z,--terminal", enum_opts.z, "terminal state for the fill report");
  enum_cmd->add_option("--t-max", enum_opts.t_max, "largest width for joint / cftp-law")
      ->check(CLI::NonNegativeNumber);

  CheckOpts check_opts;
  auto* check_cmd = app.add_subcommand("check", "validate a chain and its rule");
  add_chain_flags(check_cmd, check_opts.chain);
  check_cmd->add_option("--t-max", check_opts.t_max, "largest width for the exact diagnostic")
      ->check(CLI::NonNegativeNumber);
  check_cmd->add_flag("--no-connection", check_opts.no_connection,
                      "skip the exact sampler diagnostics");

  CurveOpts curve_opts;
  auto* curve_cmd = app.add_subcommand("curve", "acceptance curve on the reflecting walk");
  curve_cmd->add_option("-n", curve_opts.n, "walk size (states 0..n)")->check(CLI::PositiveNumber);
  curve_cmd->add_option("--grid", curve_opts.grid, "comma-separated c values, t = ceil(c n^2)")
      ->delimiter(',');
  curve_cmd->add_option("--reps", curve_opts.reps, "replications per grid point")
      ->check(CLI::PositiveNumber);
  curve_cmd->add_option("--seed", curve_opts.seed, "rng seed (PS_SEED otherwise)");
  curve_cmd->add_option("--jobs", curve_opts.jobs, "worker threads")->check(CLI::PositiveNumber);
  curve_cmd->add_option("--csv", curve_opts.csv_path, "write the curve table as CSV here");

  InterruptOpts int_opts;
  auto* int_cmd = app.add_subcommand("test-interrupt", "output-runtime independence test");
  add_chain_flags(int_cmd, int_opts.chain);
  int_cmd->add_option("--sampler", int_opts.sampler, "fill | cftp")
      ->check(CLI::IsMember({"fill", "cftp"}));
  int_cmd->add_option("-t,--horizon", int_opts.horizon, "fixed window for the fill sampler")
      ->check(CLI::PositiveNumber);
  int_cmd->add_option("--reps", int_opts.reps, "replications")->check(CLI::PositiveNumber);
  int_cmd->add_option("--buckets", int_opts.buckets, "runtime quantile buckets")
      ->check(CLI::PositiveNumber);
  int_cmd->add_option("--max-attempts", int_opts.max_attempts, "attempt budget per sample")
      ->check(CLI::PositiveNumber);
  int_cmd->add_option("--seed", int_opts.seed, "rng seed (PS_SEED otherwise)");
  int_cmd->add_option("--jobs", int_opts.jobs, "worker threads")->check(CLI::PositiveNumber);
  int_cmd->add_option("--records", int_opts.records_path,
                      "test a saved run log (JSON lines) instead of sampling");
  int_cmd->add_option("--csv", int_opts.csv_path, "write the contingency table as CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fill_cmd->parsed()) return cmd_fill(fill_opts, out);
    if (cftp_cmd->parsed()) return cmd_backward(cftp_opts, out, false);
    if (inf_cmd->parsed()) return cmd_backward(inf_opts, out, true);
    if (enum_cmd->parsed()) return cmd_enumerate(enum_opts, out);
    if (check_cmd->parsed()) return cmd_check(check_opts, out);
    if (curve_cmd->parsed()) return cmd_curve(curve_opts, out);
    if (int_cmd->parsed()) return cmd_test_interrupt(int_opts, out);
    return 2;
  } catch (const Error& e) {
    ordered_json j;
    j["error"] = {{"type", e.code()}, {"message", e.what()}};
    out << j.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    ordered_json j;
    j["error"] = {{"type", "Internal"}, {"message", e.what()}};
    out << j.dump() << "\n";
    return 1;
  }
}

}  // namespace psamp
