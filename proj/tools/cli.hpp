#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace distilkit::cli {

enum ExitCode : int {
  kOk = 0,
  kVerdict = 1,
  kUsage = 2,
  kLibrary = 3,
};

/// Runs one subcommand. `args` excludes the program name. The summary line
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace distilkit::cli
