#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xrl {

/// Exit statuses of run_command.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Entry point of the `xrl` tool. `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
                std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace xrl
