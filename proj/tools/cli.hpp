#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nbedit::cli {

enum ExitCode : int { kOk = 0, kUserError = 1, kBackendError = 2 };

// Runs one command line (args exclude the program name). Machine-readable
// output goes to `out`; human tables go to `err` unless --pretty is given.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nbedit::cli
