#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace zq {

/// Shortest decimal rendering that round-trips the exact double, so CSV
/// diffs are byte-stable across runs.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_int(long long v) { return std::to_string(v); }

} // namespace zq
