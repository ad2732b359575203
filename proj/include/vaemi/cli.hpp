#pragma once

#include <iosfwd>

namespace vaemi::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericFailure = 3 };

/// Runs the `vaemi` command line (analyze, simulate, sweep, bounds, validate).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vaemi::cli
