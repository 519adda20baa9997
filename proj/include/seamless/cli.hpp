#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seamless::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kNumericError = 2,
  kDataError = 3,
};

/// Runs one CLI invocation. `args` excludes the program name. Results go to
/// `out` (or the --out file), diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace seamless::cli
