#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace synparse::cli {

inline constexpr const char* kToolVersion = "1.0.0";

// Dispatches one command (args exclude the program name) and returns the
// process exit code: 0 success, 1 usage error, 2 data or configuration
// error, 3 runtime or numeric error. Normal output goes to `out`,
// diagnostics to `err`. Every command writes its outputs, a metrics.jsonl,
// a timing.jsonl, and a manifest.json under its --out directory; the
// manifest is sufficient to re-run the command byte-identically (wall times
// excepted) via `rerun`.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace synparse::cli
