#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rdd {

/// Runs the rdd-bench command line. `args[0]` is the program name.
/// Machine-readable output goes to `out` (or the --output file), the human
/// summary to `err`. Returns 0 on success, 1 on a toolkit error and 2 on a
/// usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rdd
