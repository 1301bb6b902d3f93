#pragma once

#include <string>
#include <vector>

namespace recigraph {

// Command-line entry point shared by the binary and the tests.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.
int run_cli(const std::vector<std::string>& args);

}  // namespace recigraph
