#pragma once

#include <iosfwd>

namespace placebo::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeFailure = 1;
inline constexpr int kUsageError = 2;

/// Parses argv and dispatches to one subcommand. Machine-readable output goes
/// to `out`, progress and tables to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace placebo::cli
