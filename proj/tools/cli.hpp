#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spiked::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kDomain = 3 };

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace spiked::cli
