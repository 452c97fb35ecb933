#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "labels.hpp"

namespace aicfc {

enum class ParseFailure {
    NoJson,          // nothing JSON-like in the output
    InvalidJson,     // candidate text found but it does not parse
    NotAnObject,
    MissingVeracity, // no "claim_veracity" object
    MissingVerdict,  // no "veracity_verdict" string
    BadScore,        // a label score is absent or not a number
};

inline constexpr std::string_view parse_failure_name(ParseFailure f) noexcept {
    switch (f) {
    case ParseFailure::NoJson:
        return "no_json";
    case ParseFailure::InvalidJson:
        return "invalid_json";
    case ParseFailure::NotAnObject:
        return "not_an_object";
    case ParseFailure::MissingVeracity:
        return "missing_claim_veracity";
    case ParseFailure::MissingVerdict:
        return "missing_veracity_verdict";
    case ParseFailure::BadScore:
        return "bad_score";
    }
    return "unknown";
}

class VerdictParseError : public Error {
public:
    VerdictParseError(ParseFailure kind, const std::string& what)
        : Error(std::string(parse_failure_name(kind)) + ": " + what), kind_(kind) {}

    ParseFailure kind() const noexcept { return kind_; }

private:
    ParseFailure kind_;
};

/// Likert rating (1..5) per label, indexed in kLabels order.
struct LikertScores {
    std::array<int, 4> values{1, 1, 1, 1};

    int& operator[](Label l) noexcept { return values[static_cast<std::size_t>(l)]; }
    int operator[](Label l) const noexcept { return values[static_cast<std::size_t>(l)]; }
    bool operator==(const LikertScores&) const = default;
};

struct QaTriple {
    std::string question;
    std::string answer;
    std::optional<int> source_id; // empty when the model cited no valid source
    std::string answer_type;
    std::string url;
};

struct VerdictReport {
    std::vector<QaTriple> qa;
    LikertScores scores;
    std::string model_verdict;
    Label final_label = Label::Supported;
    std::optional<std::string> think_text;
};

inline constexpr std::size_t kMaxQuestions = 10;

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::optional<long> leading_integer(std::string_view s) {
    const auto start = s.find_first_of("0123456789");
    if (start == std::string_view::npos) {
        return std::nullopt;
    }
    long v = 0;
    for (std::size_t i = start; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i) {
        v = v * 10 + (s[i] - '0');
        if (v > 1'000'000) {
            break;
        }
    }
    return v;
}

} // namespace detail

struct ThinkSplit {
    std::string body;
    std::optional<std::string> think_text;
};

/// Remove <think> spans from model output. An unclosed <think> runs to the
/// end of the text; a </think> with no opening tag closes a span that starts
/// at the beginning. Every span is removed, so the operation is idempotent;
/// the contents of all spans are joined into think_text.
inline ThinkSplit strip_think(std::string_view raw) {
    static constexpr std::string_view kOpen = "<think>";
    static constexpr std::string_view kClose = "</think>";
    std::string rest(raw);
    std::optional<std::string> think;
    const auto keep = [&](std::string_view content) {
        const auto t = detail::trim(content);
        if (!think) {
            think = std::string(t);
        } else if (!t.empty()) {
            *think += "\n";
            *think += t;
        }
    };
    for (;;) {
        const auto open = rest.find(kOpen);
        const auto close = rest.find(kClose);
        if (open == std::string::npos && close == std::string::npos) {
            break;
        }
        if (close < open) {
            keep(std::string_view(rest).substr(0, close));
            rest.erase(0, close + kClose.size());
            continue;
        }
        const auto end = rest.find(kClose, open + kOpen.size());
        if (end == std::string::npos) {
            keep(std::string_view(rest).substr(open + kOpen.size()));
            rest.erase(open);
            continue;
        }
        keep(std::string_view(rest).substr(open + kOpen.size(), end - open - kOpen.size()));
        rest.erase(open, end + kClose.size() - open);
    }
    return ThinkSplit{std::string(detail::trim(rest)), std::move(think)};
}

/// The first ```json fenced block, or else the first balanced {...} span
/// (string literals are respected when matching braces).
inline std::string extract_json(std::string_view body) {
    static constexpr std::string_view kFence = "```json";
    if (const auto fence = body.find(kFence); fence != std::string_view::npos) {
        auto start = body.find('\n', fence + kFence.size());
        start = start == std::string_view::npos ? body.size() : start + 1;
        const auto stop = body.find("```", start);
        const auto inner = detail::trim(body.substr(start, stop == std::string_view::npos ? std::string_view::npos : stop - start));
        if (!inner.empty()) {
            return std::string(inner);
        }
    }
    const auto open = body.find('{');
    if (open == std::string_view::npos) {
        throw VerdictParseError(ParseFailure::NoJson, "no JSON object in model output");
    }
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < body.size(); ++i) {
        const char c = body[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}' && --depth == 0) {
            return std::string(body.substr(open, i - open + 1));
        }
    }
    throw VerdictParseError(ParseFailure::NoJson, "unbalanced braces in model output");
}

/// Argmax over the four scores. Ties prefer the model's own verdict when it is
/// among the tied labels, otherwise the first tied label in kLabels order.
inline Label select_label(const LikertScores& scores, std::optional<Label> model_verdict = std::nullopt) {
    const int best = *std::max_element(scores.values.begin(), scores.values.end());
    if (model_verdict && scores[*model_verdict] == best) {
        return *model_verdict;
    }
    for (Label l : kLabels) {
        if (scores[l] == best) {
            return l;
        }
    }
    return Label::Supported;
}

namespace detail {

inline std::optional<int> likert_value(const nlohmann::json& v) {
    std::optional<double> raw;
    if (v.is_number()) {
        raw = v.get<double>();
    } else if (v.is_string()) {
        if (auto n = leading_integer(v.get_ref<const std::string&>())) {
            raw = static_cast<double>(*n);
        }
    }
    if (!raw || !std::isfinite(*raw)) {
        return std::nullopt;
    }
    return static_cast<int>(std::clamp(std::lround(*raw), 1L, 5L));
}

inline std::string text_value(const nlohmann::json& v) {
    if (v.is_string()) {
        return std::string(trim(v.get_ref<const std::string&>()));
    }
    if (v.is_boolean()) {
        return v.get<bool>() ? "Yes" : "No";
    }
    if (v.is_number()) {
        return v.dump();
    }
    return {};
}

inline std::string canonical_answer_type(const nlohmann::json& v) {
    if (v.is_string()) {
        const std::string key = alnum_lower(v.get_ref<const std::string&>());
        for (std::string_view t : {"Boolean", "Extractive", "Abstractive", "Unanswerable"}) {
            if (key == alnum_lower(t)) {
                return std::string(t);
            }
        }
    }
    return "Abstractive";
}

inline std::optional<int> source_value(const nlohmann::json& v) {
    if (v.is_number_integer()) {
        return v.get<int>();
    }
    if (v.is_number()) {
        return static_cast<int>(std::lround(v.get<double>()));
    }
    if (v.is_string()) {
        if (auto n = leading_integer(v.get_ref<const std::string&>())) {
            return static_cast<int>(*n);
        }
    }
    if (v.is_array() && !v.empty()) {
        return source_value(v.front());
    }
    return std::nullopt;
}

} // namespace detail

/// Validate the model's JSON answer and turn it into a report. `source_urls[i]`
/// is the URL of source ID i+1. Malformed QA entries are skipped; the score
/// block and the verdict field are mandatory.
inline VerdictReport parse_verdict(std::string_view json_text, std::span<const std::string> source_urls) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw VerdictParseError(ParseFailure::InvalidJson, e.what());
    }
    if (!doc.is_object()) {
        throw VerdictParseError(ParseFailure::NotAnObject, "top-level JSON is not an object");
    }
    const auto veracity = doc.find("claim_veracity");
    if (veracity == doc.end() || !veracity->is_object()) {
        throw VerdictParseError(ParseFailure::MissingVeracity, "\"claim_veracity\" object missing");
    }
    const auto verdict = doc.find("veracity_verdict");
    if (verdict == doc.end() || !verdict->is_string()) {
        throw VerdictParseError(ParseFailure::MissingVerdict, "\"veracity_verdict\" string missing");
    }

    VerdictReport report;
    std::array<bool, 4> seen{};
    for (const auto& [key, value] : veracity->items()) {
        const auto label = parse_label(key);
        if (!label) {
            continue;
        }
        const auto score = detail::likert_value(value);
        if (!score) {
            throw VerdictParseError(ParseFailure::BadScore, "score for \"" + key + "\" is not a number");
        }
        report.scores[*label] = *score;
        seen[static_cast<std::size_t>(*label)] = true;
    }
    for (Label l : kLabels) {
        if (!seen[static_cast<std::size_t>(l)]) {
            throw VerdictParseError(ParseFailure::BadScore,
                                    "no score for \"" + std::string(label_name(l)) + "\"");
        }
    }
    report.model_verdict = std::string(detail::trim(verdict->get_ref<const std::string&>()));
    report.final_label = select_label(report.scores, parse_label(report.model_verdict));

    const auto questions = doc.find("questions");
    if (questions != doc.end() && questions->is_array()) {
        for (const auto& item : *questions) {
            if (report.qa.size() == kMaxQuestions) {
                break;
            }
            if (!item.is_object()) {
                continue;
            }
            QaTriple qa;
            qa.question = detail::text_value(item.value("question", nlohmann::json{}));
            qa.answer = detail::text_value(item.value("answer", nlohmann::json{}));
            if (qa.question.empty() || qa.answer.empty()) {
                continue;
            }
            qa.answer_type = detail::canonical_answer_type(item.value("answer_type", nlohmann::json{}));
            const auto id = detail::source_value(item.value("source", nlohmann::json{}));
            if (id && *id >= 1 && static_cast<std::size_t>(*id) <= source_urls.size()) {
                qa.source_id = *id;
                qa.url = source_urls[static_cast<std::size_t>(*id - 1)];
            }
            report.qa.push_back(std::move(qa));
        }
    }
    return report;
}

/// Full path from raw assistant text to a report.
inline VerdictReport parse_model_output(std::string_view raw, std::span<const std::string> source_urls) {
    auto split = strip_think(raw);
    auto report = parse_verdict(extract_json(split.body), source_urls);
    report.think_text = std::move(split.think_text);
    return report;
}

} // namespace aicfc
