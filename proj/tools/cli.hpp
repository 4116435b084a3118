#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace specx::cli {

/// Runs one command line (args[0] is the program name). Returns the exit code:
/// 0 ok, 1 numerical failure, 2 usage or input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specx::cli
