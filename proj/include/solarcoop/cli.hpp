#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "solarcoop/errors.hpp"

namespace solarcoop::cli {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  // a game-theoretic check or identity failed
  kExitUsage = 2,        // bad flags, config values, coalition or period
  kExitSizeCap = 3,      // too many players for exhaustive coalition enumeration
  kExitIo = 4,           // input could not be read or validated, output not writable
};

int exit_code_for(ErrorKind kind);

// Runs `solar-coop` with args (program name excluded). Results go to `out`,
// diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace solarcoop::cli
