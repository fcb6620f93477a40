#pragma once

namespace aqd::cli {

/// Parses arguments, runs one subcommand, and returns the process exit code:
/// 0 success, 2 input error, 3 internal error.
int run(int argc, char** argv);

}  // namespace aqd::cli
