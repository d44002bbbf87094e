#include "psamp/record_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>

#include "psamp/errors.hpp"

namespace psamp {

namespace {

nlohmann::ordered_json driver_to_json(const Driver& u) {
  nlohmann::ordered_json j;
  if (const auto* atom = std::get_if<AtomDriver>(&u)) {
    j["kind"] = "atom";
    j["index"] = atom->index;
  } else if (const auto* unit = std::get_if<UnitDriver>(&u)) {
    j["kind"] = "unit";
    j["u"] = unit->u;  // shortest round-trip form; replays must be exact
  } else {
    const auto& table = std::get<TableDriver>(u);
    j["kind"] = "table";
    j["dest"] = table.dest;
  }
  return j;
}

Driver driver_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "atom") return AtomDriver{j.at("index").get<std::int32_t>()};
  if (kind == "unit") return UnitDriver{j.at("u").get<double>()};
  if (kind == "table") return TableDriver{j.at("dest").get<std::vector<State>>()};
  throw Error("BadRecord", "unknown driver kind '" + kind + "'");
}

nlohmann::ordered_json drivers_to_json(const std::vector<Driver>& drivers) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const Driver& u : drivers) out.push_back(driver_to_json(u));
  return out;
}

std::vector<Driver> drivers_from_json(const nlohmann::json& j) {
  std::vector<Driver> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(driver_from_json(item));
  return out;
}

template <typename T>
std::vector<T> read_lines(std::istream& in, T (*parse)(const nlohmann::json&)) {
  std::vector<T> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace

nlohmann::ordered_json run_record_to_json(const RunRecord& rec) {
  nlohmann::ordered_json j;
  j["attempt"] = rec.attempt_index;
  j["horizon"] = rec.horizon;
  j["accepted"] = rec.accepted;
  j["output"] = rec.output ? nlohmann::ordered_json(*rec.output) : nlohmann::ordered_json(nullptr);
  j["trajectory"] = rec.trajectory;
  j["drivers"] = drivers_to_json(rec.drivers);
  j["markov_steps"] = rec.markov_steps;
  j["cumulative_markov_steps"] = rec.cumulative_markov_steps;
  j["first_hit"] =
      rec.first_hit ? nlohmann::ordered_json(*rec.first_hit) : nlohmann::ordered_json(nullptr);
  return j;
}

RunRecord run_record_from_json(const nlohmann::json& j) {
  RunRecord rec;
  rec.attempt_index = j.at("attempt").get<int>();
  rec.horizon = j.at("horizon").get<int>();
  rec.accepted = j.at("accepted").get<bool>();
  if (!j.at("output").is_null()) rec.output = j.at("output").get<State>();
  rec.trajectory = j.at("trajectory").get<std::vector<State>>();
  rec.drivers = drivers_from_json(j.at("drivers"));
  rec.markov_steps = j.at("markov_steps").get<long>();
  rec.cumulative_markov_steps = j.at("cumulative_markov_steps").get<long>();
  if (!j.at("first_hit").is_null()) rec.first_hit = j.at("first_hit").get<int>();
  return rec;
}

nlohmann::ordered_json backward_run_to_json(const BackwardRun& run, std::string_view policy) {
  nlohmann::ordered_json j;
  j["T"] = run.T;
  j["output"] = run.output;
  j["W"] = run.W ? nlohmann::ordered_json(*run.W) : nlohmann::ordered_json(nullptr);
  if (!policy.empty()) j["policy"] = policy;
  j["trajectory"] = run.trajectory;
  j["chain_steps"] = run.chain_steps;
  j["drivers_by_depth"] = drivers_to_json(run.log.by_depth);
  return j;
}

BackwardRun backward_run_from_json(const nlohmann::json& j) {
  BackwardRun run;
  run.T = j.at("T").get<std::int64_t>();
  run.output = j.at("output").get<State>();
  if (!j.at("W").is_null()) run.W = j.at("W").get<State>();
  run.trajectory = j.at("trajectory").get<std::vector<State>>();
  run.chain_steps = j.at("chain_steps").get<long>();
  run.log.by_depth = drivers_from_json(j.at("drivers_by_depth"));
  return run;
}

void write_run_records(std::ostream& out, std::span<const RunRecord> records) {
  for (const RunRecord& rec : records) out << run_record_to_json(rec).dump() << '\n';
}

std::vector<RunRecord> read_run_records(std::istream& in) {
  return read_lines<RunRecord>(in, &run_record_from_json);
}

void write_backward_runs(std::ostream& out, std::span<const BackwardRun> runs,
                         std::string_view policy) {
  for (const BackwardRun& run : runs) out << backward_run_to_json(run, policy).dump() << '\n';
}

std::vector<BackwardRun> read_backward_runs(std::istream& in) {
  return read_lines<BackwardRun>(in, &backward_run_from_json);
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

}  // namespace psamp
