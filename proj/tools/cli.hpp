#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lapis::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_invalid = 1,  // parse or validation errors in an input
    exit_usage = 2,
    exit_io = 3,
};

/// Runs one command line. `args` excludes the program name. Artifacts go to
/// `out` (or the -o file), diagnostics to `err`; `in` backs the `-` argument.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace lapis::cli
