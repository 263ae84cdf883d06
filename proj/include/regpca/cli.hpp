#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace regpca {

inline constexpr const char* kToolVersion = "0.3.0";

/// Runs the command line tool on `args` (argv without the program name) and
/// returns the process exit status: 0 success, 2 usage, 3 data, 4 numeric.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace regpca
