#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace ptrack::app {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kInputError = 2,
    kInternalError = 3,
};

/// Environment variable that overrides the configured run directory.
inline constexpr const char* kRunDirEnv = "PTRACK_RUN_DIR";

/// Runs the command line `args` (args[0] is the program name) and returns the
/// process exit status.
int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

}  // namespace ptrack::app
