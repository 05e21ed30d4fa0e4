// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace treenlg {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // internal error, or a failed gradient check
  kExitInput = 2,
  kExitCompatibility = 3,
  kExitMode = 4,
};

/// Runs one subcommand. `args` excludes the program name. Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace treenlg
