#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nyspec {

/// Exit codes of the nyspec tool.
enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_runtime = 3 };

/// Runs the command line `args` (args[0] is the program name). Output that
/// is not written to files goes to `out` / `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace nyspec
