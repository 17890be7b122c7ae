#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rgtn {

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Entry point of the `rgtn` tool. `args` excludes the program name.
/// Commands: train, eval, bench, decompose, inspect.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rgtn
