#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace locjepa::cli {

/// Runs the command line; returns the process exit code
/// (0 ok, 1 unexpected failure, 2 usage/config, 3 data, 4 numeric).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace locjepa::cli
