#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace meshrect {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitNumerical = 3,
};

/// Runs the `meshrect` tool on `args` (program name excluded).
/// Subcommands: rectangle, synth, eval, ablate, gradcheck.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace meshrect
