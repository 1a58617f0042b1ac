#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gomp::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kNoTrajectory = 2,
  kValidationFailed = 3,
};

/// Runs the `gomp` command line. `args` excludes the program name.
/// Tables go to `out`, diagnostics to `err`; machine output only to files.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gomp::cli
