#pragma once

#include <string>
#include <vector>

namespace ctts {

// Entry point behind the `ctts` binary. `args` excludes the program name.
// Returns the process exit code: 0 success, 2 usage or data error,
// 3 numerical failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace ctts
