#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

#include "error.hpp"

namespace aicfc {

enum class Label { Supported = 0, Refuted = 1, NotEnoughEvidence = 2, Conflicting = 3 };

/// Fixed label order; also the tie-break order for verdict selection.
inline constexpr std::array<Label, 4> kLabels = {Label::Supported, Label::Refuted,
                                                 Label::NotEnoughEvidence, Label::Conflicting};

inline constexpr std::string_view label_name(Label label) noexcept {
    switch (label) {
    case Label::Supported:
        return "Supported";
    case Label::Refuted:
        return "Refuted";
    case Label::NotEnoughEvidence:
        return "Not Enough Evidence";
    case Label::Conflicting:
        return "Conflicting Evidence/Cherrypicking";
    }
    return "Supported";
}

namespace detail {

inline std::string alnum_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            out.push_back(static_cast<char>(std::tolower(u)));
        }
    }
    return out;
}

} // namespace detail

/// Lenient label lookup: case, spacing and punctuation are ignored and the
/// shorthand forms models tend to emit ("Conflicting Evidence", "NEI") match.
inline std::optional<Label> parse_label(std::string_view text) {
    const std::string key = detail::alnum_lower(text);
    if (key.empty()) {
        return std::nullopt;
    }
    if (key.starts_with("support")) {
        return Label::Supported;
    }
    if (key.starts_with("refut")) {
        return Label::Refuted;
    }
    if (key.starts_with("notenough") || key == "nei" || key == "nee") {
        return Label::NotEnoughEvidence;
    }
    if (key.starts_with("conflicting") || key.starts_with("cherrypick")) {
        return Label::Conflicting;
    }
    return std::nullopt;
}

inline Label label_from_string(std::string_view text) {
    if (auto label = parse_label(text)) {
        return *label;
    }
    throw FormatError("unknown veracity label: \"" + std::string(text) + "\"");
}

} // namespace aicfc
