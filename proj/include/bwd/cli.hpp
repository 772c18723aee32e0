#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bwd::cli {

enum ExitCode : int { ok = 0, usage = 1, data_error = 2, degenerate = 3 };

/// Runs one `bwd` invocation; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bwd::cli
