#pragma once

#include <iosfwd>

namespace psamp {

// Entry point behind the `psamp` binary, factored for in-process testing.
// Returns the process exit code: 0 success, 1 runtime failure (a JSON error
// object goes to `out`), 2 usage errors (synopsis goes to `err`).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace psamp
