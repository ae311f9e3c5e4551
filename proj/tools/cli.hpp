#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rulf::cli {

// Runs one command line (without the program name) against the given streams.
// Returns the process exit code: 0 success, 1 usage error, 2 data error,
// 3 training divergence. Errors print one machine-readable line on `err`:
// "rulf: <ErrorCode>: <message>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace rulf::cli
