#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "psamp/cftp.hpp"
#include "psamp/fill.hpp"

namespace psamp {

// JSON-lines serialization of run records: one record per line, stable key
// order, floats at 12 significant digits.
nlohmann::ordered_json run_record_to_json(const RunRecord& rec);
RunRecord run_record_from_json(const nlohmann::json& j);

// `policy` tags lines produced by the infinite-window sampler ("every" /
// "pow2"); empty leaves the key out, as for coupling-from-the-past runs.
nlohmann::ordered_json backward_run_to_json(const BackwardRun& run,
                                            std::string_view policy = {});
BackwardRun backward_run_from_json(const nlohmann::json& j);

void write_run_records(std::ostream& out, std::span<const RunRecord> records);
std::vector<RunRecord> read_run_records(std::istream& in);

void write_backward_runs(std::ostream& out, std::span<const BackwardRun> runs,
                         std::string_view policy = {});
std::vector<BackwardRun> read_backward_runs(std::istream& in);

// %.12g rendering used for every floating-point field the CLI emits.
std::string format_double(double x);

}  // namespace psamp
