#pragma once
// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
// validation error, 3 numerical failure. Human-readable progress goes to
// stderr; machine output (JSON/CSV) to stdout or files.

#include <string>
#include <vector>

namespace kge::cli {

// argv without the program name.
int run(const std::vector<std::string>& args);

} // namespace kge::cli
