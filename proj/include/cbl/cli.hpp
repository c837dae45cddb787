#pragma once
#include <string>
#include <vector>

namespace cbl::cli {

// Parse argv and run a subcommand. Returns the process exit code:
// 0 success, 1 usage error, 2 invariant or acceptance failure.
int dispatch(const std::vector<std::string>& args);

std::string usage();

} // namespace cbl::cli
