#pragma once

#include <iosfwd>

namespace xssguard::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `xssguard` tool. Subcommands: generate, scenario,
/// rank, train, evaluate, roc, replay, serve. Output that is not written to
/// a file goes to `out`; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace xssguard::cli
