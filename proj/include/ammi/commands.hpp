#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ammi {

enum ExitCode : int {
  exit_ok = 0,
  exit_other = 1,
  exit_usage = 2,
  exit_io = 3,
  exit_validation = 4,
  exit_dimension = 5,
  exit_divergence = 6,
  exit_degenerate = 7,
};

/// Runs one subcommand. `args` excludes the program name. Errors are
/// reported on `err` as a single line: error: kind=<kind> message="...".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ammi
