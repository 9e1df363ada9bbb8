#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mrcs::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kDataError = 3,
  kNumerical = 4,
};

/// Runs the command line `args` (args[0] is the program name). Normal
/// output goes to `out`, diagnostics to `err`; the return value is the
/// process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mrcs::cli
