#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace calib {

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitSolver = 2, kExitVerify = 3 };

// Records go to `out` as one JSON object per line; diagnostics and usage
// go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace calib
