#pragma once

#include <string>
#include <vector>

namespace topseg::cli {

enum ExitCode : int { kOk = 0, kPartialFailure = 1, kConfigOrDataError = 2 };

// Parses `topseg <subcommand> ...` and runs it. Never throws.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace topseg::cli
