#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace splatstyle::cli {

/// Runs the command line with `args` (excluding the program name). Returns the
/// process exit status: 0 on success, 2 on any library error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace splatstyle::cli
