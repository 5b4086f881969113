#pragma once

#include <string>
#include <vector>

namespace gm::cli {

/// Entry point shared by the binary and the tests. Returns the process
/// exit code (0 on success; for `check`, 0 iff every assertion passed).
int run(const std::vector<std::string>& args);

}  // namespace gm::cli
