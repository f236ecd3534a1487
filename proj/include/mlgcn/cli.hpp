#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mlgcn {

enum ExitCode : int {
    kExitSuccess = 0,
    kExitUsage = 1,
    kExitIo = 2,
    kExitNumerical = 3,
};

// Entry point of the command-line tool. args[0] is the program name.
// Subcommands: generate, solve, baseline, train, evaluate, interpret.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlgcn
