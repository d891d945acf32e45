#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seqlab::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kConsistency = 2,
    kPrecision = 3,
};

/// Runs one command. `args` excludes the program name. Results go to `out`
/// (or to --out), diagnostics and warnings to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace seqlab::cli
