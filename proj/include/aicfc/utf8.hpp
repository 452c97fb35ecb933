#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace aicfc::utf8 {

// Byte length of the scalar value starting at s[i]. Malformed or truncated
// sequences count as a single byte so every input has a well-defined length.
inline std::size_t sequence_length(std::string_view s, std::size_t i) noexcept {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t n = 1;
    if (lead >= 0xF0 && lead <= 0xF4) {
        n = 4;
    } else if (lead >= 0xE0) {
        n = lead <= 0xEF ? 3 : 1;
    } else if (lead >= 0xC2) {
        n = 2;
    }
    if (n == 1 || i + n > s.size()) {
        return 1;
    }
    for (std::size_t k = 1; k < n; ++k) {
        if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
            return 1;
        }
    }
    return n;
}

/// Number of scalar values in `s`.
inline std::size_t length(std::string_view s) noexcept {
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.size(); i += sequence_length(s, i)) {
        ++count;
    }
    return count;
}

/// Byte offsets of every scalar boundary, including 0 and s.size().
inline std::vector<std::size_t> boundaries(std::string_view s) {
    std::vector<std::size_t> out;
    out.reserve(s.size() + 1);
    std::size_t i = 0;
    for (; i < s.size(); i += sequence_length(s, i)) {
        out.push_back(i);
    }
    out.push_back(s.size());
    return out;
}

} // namespace aicfc::utf8
