#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ihoc {

enum ExitCode : int { kExitOk = 0, kExitNegative = 1, kExitUsage = 2, kExitNumeric = 3 };

/// Runs one command line. argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ihoc
