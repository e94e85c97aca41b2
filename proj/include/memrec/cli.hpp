#pragma once

#include <iosfwd>

namespace memrec {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitDivergence = 3;

// Runs the `memrec` tool: gen-data, train, eval, sweep, collisions, bench.
// Machine-readable results go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace memrec
