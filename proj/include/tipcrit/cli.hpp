#pragma once

#include <iosfwd>

namespace tipcrit {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitFieldFault = 2,
  kExitInfeasibleBudget = 3,
  kExitVerificationFailed = 4,
};

// The tipcrit command line; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tipcrit
