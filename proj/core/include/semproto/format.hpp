#pragma once

#include <charconv>
#include <string>

namespace semproto {

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Like format_double but always with a decimal point or exponent, so that
/// integral probabilities serialize as `1.0`, not `1`.
inline std::string format_double_decimal(double v) {
    std::string s = format_double(v);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
        s += ".0";
    }
    return s;
}

}  // namespace semproto
