#pragma once

#include <string>
#include <vector>

namespace wsseg::cli {

/// Entry point behind the wsseg binary; returns the process exit code.
/// All errors are reported on stderr as a single "error: ..." line.
int run(const std::vector<std::string>& args);

}  // namespace wsseg::cli
