#pragma once

#include <string>
#include <vector>

namespace zq::cli {

/// Exit codes: 0 success, 1 validation failure, 2 parse failure,
/// 3 runtime failure.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

} // namespace zq::cli
