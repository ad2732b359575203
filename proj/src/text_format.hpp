#pragma once

#include <array>
#include <charconv>
#include <limits>
#include <string>

namespace vaemi::detail {

/// Decimal text with 17 significant digits (round-trips every double).
inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general,
                                   std::numeric_limits<double>::max_digits10);
    return std::string(buf.data(), res.ptr);
}

}  // namespace vaemi::detail
