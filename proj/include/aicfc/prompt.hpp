#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "claim.hpp"
#include "error.hpp"
#include "fewshot.hpp"
#include "labels.hpp"
#include "retrieve.hpp"
#include "utf8.hpp"

namespace aicfc {

namespace prompt_text {

inline constexpr std::string_view kInstructions =
    "You are a professional fact checker, formulate up to 10 questions that cover all the facts needed to "
    "validate whether the factual statement (in User message) is true, false, uncertain or a matter of "
    "opinion. Each question has one of four answer types: Boolean, Extractive, Abstractive and Unanswerable "
    "using the provided sources.\n"
    "After formulating Your questions and their answers using the provided sources, You evaluate the "
    "possible veracity verdicts (Supported claim, Refuted claim, Not enough evidence, or Conflicting "
    "evidence/Cherrypicking) given your claim and evidence on a Likert scale (1 - Strongly disagree, 2 - "
    "Disagree, 3 - Neutral, 4 - Agree, 5 - Strongly agree). Ultimately, you note the single likeliest "
    "veracity verdict according to your best knowledge.\n"
    "The facts must be coming from these sources, please refer them using assigned IDs:\n";

inline constexpr std::string_view kOutputFormat =
    "## Output formatting\n"
    "Please, you MUST only print the output in the following output format:\n"
    "```json\n"
    "{\n"
    " \"questions\":\n"
    "     [\n"
    "         {\"question\": \"<Your first question>\", \"answer\": \"<The answer to the Your first "
    "question>\", \"source\": \"<Single numeric source ID backing the answer for Your first question>\", "
    "\"answer_type\":\"<The type of first answer>\"},\n"
    "         {\"question\": \"<Your second question>\", \"answer\": \"<The answer to the Your second "
    "question>\", \"source\": \"<Single numeric Source ID backing the answer for Your second question>\", "
    "\"answer_type\":\"<The type of second answer>\"}\n"
    "     ],\n"
    " \"claim_veracity\": {\n"
    "     \"Supported\": \"<Likert-scale rating of how much You agree with the 'Supported' veracity "
    "classification>\",\n"
    "     \"Refuted\": \"<Likert-scale rating of how much You agree with the 'Refuted' veracity "
    "classification>\",\n"
    "     \"Not Enough Evidence\": \"<Likert-scale rating of how much You agree with the 'Not Enough "
    "Evidence' veracity classification>\",\n"
    "     \"Conflicting Evidence/Cherrypicking\": \"<Likert-scale rating of how much You agree with the "
    "'Conflicting Evidence/Cherrypicking' veracity classification>\"\n"
    " },\n"
    " \"veracity_verdict\": \"<The suggested veracity classification for the claim>\"\n"
    "}\n"
    "```\n";

inline constexpr std::string_view kFewShotHeader =
    "## Few-shot learning\n"
    "You have access to the following few-shot learning examples for questions and answers.:\n";

inline constexpr std::string_view kSectionRule = "---\n";

} // namespace prompt_text

/// System and user messages for one claim.
struct PromptBundle {
    std::string system;
    std::string user;
    std::size_t char_count = 0;
    std::vector<int> source_ids;
};

namespace detail {

inline void append_line(std::string& out, std::string_view text) {
    if (!text.empty()) {
        out.append(text);
        out.push_back('\n');
    }
}

} // namespace detail

/// Render the system prompt: instructions, one block per source (IDs in MMR
/// order), the JSON output schema, then the few-shot QA demonstrations.
/// Few-shot fields are inserted verbatim, without escaping.
inline std::string build_system_prompt(std::span<const RetrievedSource> sources,
                                       std::span<const TrainExample> examples) {
    if (sources.empty()) {
        throw InvalidArgument("system prompt needs at least one source");
    }
    std::string out(prompt_text::kInstructions);
    out += prompt_text::kSectionRule;
    for (const auto& source : sources) {
        out += "## Source ID: " + std::to_string(source.source_id) + " [" + source.chunk.url + "]\n";
        detail::append_line(out, source.chunk.context_before);
        detail::append_line(out, source.chunk.text);
        detail::append_line(out, source.chunk.context_after);
        out.push_back('\n');
    }
    out += prompt_text::kSectionRule;
    out += prompt_text::kOutputFormat;
    out += prompt_text::kSectionRule;
    out += prompt_text::kFewShotHeader;
    for (const auto& example : examples) {
        out += "\n### Question examples for claim \"" + example.claim + "\" (verdict ";
        out += label_name(example.gold_label);
        out += ")\n";
        for (const auto& qa : example.qa_pairs) {
            out += "\"question\": \"" + qa.question + "\", \"answer\": \"" + qa.answer +
                   "\", \"answer_type\": \"" + qa.answer_type + "\"\n";
        }
    }
    return out;
}

/// The claim text alone, or with its speaker/date/source lines when
/// `with_metadata` is set.
inline std::string build_user_message(const Claim& claim, bool with_metadata = false) {
    if (claim.text.empty()) {
        throw InvalidArgument("claim " + std::to_string(claim.claim_id) + " has empty text");
    }
    if (!with_metadata) {
        return claim.text;
    }
    std::string out = "Claim: " + claim.text;
    if (!claim.speaker.empty()) {
        out += "\nSpeaker: " + claim.speaker;
    }
    if (!claim.date.empty()) {
        out += "\nDate: " + claim.date;
    }
    if (!claim.reporting_source.empty()) {
        out += "\nReporting source: " + claim.reporting_source;
    }
    return out;
}

inline PromptBundle build_prompt(const Claim& claim, std::span<const RetrievedSource> sources,
                                 std::span<const TrainExample> examples, bool with_metadata = false) {
    PromptBundle bundle;
    bundle.system = build_system_prompt(sources, examples);
    bundle.user = build_user_message(claim, with_metadata);
    bundle.char_count = utf8::length(bundle.system) + utf8::length(bundle.user);
    for (const auto& s : sources) {
        bundle.source_ids.push_back(s.source_id);
    }
    return bundle;
}

} // namespace aicfc
