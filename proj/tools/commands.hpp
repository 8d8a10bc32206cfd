#pragma once

#include <iosfwd>

namespace eitlab::cli {

/// Exit codes: 0 success, 1 computation failure, 2 usage or config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv and runs one subcommand. Reports go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eitlab::cli
