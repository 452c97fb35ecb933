#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "labels.hpp"

namespace aicfc {

struct QaExample {
    std::string question;
    std::string answer;
    std::string answer_type;

    bool operator==(const QaExample&) const = default;
};

/// Solved train-set claim used as a few-shot demonstration.
struct TrainExample {
    std::string claim;
    Label gold_label = Label::Supported;
    std::vector<QaExample> qa_pairs;
};

inline bool is_answer_type(std::string_view t) {
    return t == "Boolean" || t == "Extractive" || t == "Abstractive" || t == "Unanswerable";
}

struct TrainSetFields {
    std::string claim = "claim";
    std::string label = "label";
    std::string questions = "questions";
    std::string question = "question";
    std::string answers = "answers";
    std::string answer = "answer";
    std::string answer_type = "answer_type";
};

/// Read an AVeriTeC-style train file (JSON array). Every answer of every
/// question becomes one QA pair; entries ending up with no usable pair are
/// dropped.
inline std::vector<TrainExample> load_train_set(const std::filesystem::path& path,
                                                const TrainSetFields& f = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open train set " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("train set " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw FormatError("train set must be a JSON array");
    }
    std::vector<TrainExample> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        const std::string where = "train set entry " + std::to_string(i) + ": ";
        if (!item.is_object() || !item.contains(f.claim) || !item[f.claim].is_string()) {
            throw FormatError(where + "missing \"" + f.claim + "\"");
        }
        TrainExample ex;
        ex.claim = item[f.claim].get<std::string>();
        try {
            ex.gold_label = label_from_string(item.value(f.label, std::string{}));
        } catch (const FormatError& e) {
            throw FormatError(where + e.what());
        }
        for (const auto& q : item.value(f.questions, nlohmann::json::array())) {
            if (!q.is_object() || !q.contains(f.question) || !q[f.question].is_string()) {
                continue;
            }
            for (const auto& a : q.value(f.answers, nlohmann::json::array())) {
                if (!a.is_object()) {
                    continue;
                }
                QaExample qa{q[f.question].get<std::string>(), a.value(f.answer, std::string{}),
                             a.value(f.answer_type, std::string{})};
                if (!qa.question.empty() && !qa.answer.empty() && is_answer_type(qa.answer_type)) {
                    ex.qa_pairs.push_back(std::move(qa));
                }
            }
        }
        if (!ex.qa_pairs.empty()) {
            out.push_back(std::move(ex));
        }
    }
    return out;
}

/// Lowercase, split on runs of non-alphanumeric ASCII. Bytes >= 0x80 count as
/// word characters so UTF-8 words stay whole.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (u >= 0x80 || std::isalnum(u)) {
            current.push_back(static_cast<char>(u < 0x80 ? std::tolower(u) : u));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
    std::size_t n_examples = 3;

    void validate() const {
        if (!(k1 > 0.0)) {
            throw InvalidArgument("BM25 k1 must be > 0");
        }
        if (!(b >= 0.0 && b <= 1.0)) {
            throw InvalidArgument("BM25 b must lie in [0, 1]");
        }
        if (n_examples < 1) {
            throw InvalidArgument("n_examples must be >= 1");
        }
    }
};

struct ScoredDoc {
    std::size_t index = 0;
    double score = 0.0;
};

/// Okapi BM25 over pre-tokenized documents with
///   IDF(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
/// Immutable after construction.
class Bm25Index {
public:
    Bm25Index() = default;

    explicit Bm25Index(const std::vector<std::string>& documents, Bm25Params params = {})
        : params_(params) {
        params_.validate();
        term_freqs_.reserve(documents.size());
        std::size_t total = 0;
        for (const auto& text : documents) {
            std::unordered_map<std::string, std::size_t> tf;
            const auto tokens = tokenize(text);
            for (const auto& t : tokens) {
                ++tf[t];
            }
            for (const auto& [term, _] : tf) {
                ++doc_freq_[term];
            }
            lengths_.push_back(tokens.size());
            total += tokens.size();
            term_freqs_.push_back(std::move(tf));
        }
        avgdl_ = documents.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(documents.size());
    }

    std::size_t size() const noexcept { return lengths_.size(); }
    double average_length() const noexcept { return avgdl_; }

    double idf(const std::string& term) const {
        const auto it = doc_freq_.find(term);
        const double df = it == doc_freq_.end() ? 0.0 : static_cast<double>(it->second);
        const double n = static_cast<double>(size());
        return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    }

    /// Score of document `doc` for a raw query string; repeated query terms
    /// contribute repeatedly.
    double score(std::string_view query, std::size_t doc) const {
        return score_tokens(tokenize(query), doc);
    }

    /// All documents ordered by score descending, ties by corpus order.
    std::vector<ScoredDoc> rank_all(std::string_view query) const {
        const auto q = tokenize(query);
        std::vector<ScoredDoc> out(size());
        for (std::size_t i = 0; i < size(); ++i) {
            out[i] = ScoredDoc{i, score_tokens(q, i)};
        }
        std::stable_sort(out.begin(), out.end(),
                         [](const ScoredDoc& a, const ScoredDoc& b) { return a.score > b.score; });
        return out;
    }

    std::vector<ScoredDoc> top(std::string_view query, std::size_t n) const {
        auto all = rank_all(query);
        all.resize(std::min(n, all.size()));
        return all;
    }

private:
    double score_tokens(const std::vector<std::string>& query, std::size_t doc) const {
        const auto& tf = term_freqs_.at(doc);
        const double relative_length = avgdl_ > 0.0 ? static_cast<double>(lengths_[doc]) / avgdl_ : 0.0;
        const double norm = params_.k1 * (1.0 - params_.b + params_.b * relative_length);
        double total = 0.0;
        for (const auto& term : query) {
            const auto it = tf.find(term);
            if (it == tf.end()) {
                continue;
            }
            const double f = static_cast<double>(it->second);
            total += idf(term) * f * (params_.k1 + 1.0) / (f + norm);
        }
        return total;
    }

    Bm25Params params_;
    std::vector<std::unordered_map<std::string, std::size_t>> term_freqs_;
    std::unordered_map<std::string, std::size_t> doc_freq_;
    std::vector<std::size_t> lengths_;
    double avgdl_ = 0.0;
};

struct RankedExample {
    TrainExample example;
    double score = 0.0;
};

/// Top `params.n_examples` of `corpus` for `query`, ranked by BM25 over the
/// train claims.
inline std::vector<RankedExample> bm25_rank(const std::vector<TrainExample>& corpus, std::string_view query,
                                            const Bm25Params& params = {}) {
    std::vector<std::string> claims;
    claims.reserve(corpus.size());
    for (const auto& ex : corpus) {
        claims.push_back(ex.claim);
    }
    const Bm25Index index(claims, params);
    std::vector<RankedExample> out;
    for (const auto& hit : index.top(query, params.n_examples)) {
        out.push_back(RankedExample{corpus[hit.index], hit.score});
    }
    return out;
}

/// BM25 selector over train-set claims.
class FewShotSelector {
public:
    FewShotSelector() = default;

    explicit FewShotSelector(std::vector<TrainExample> corpus, Bm25Params params = {})
        : corpus_(std::move(corpus)), params_(params) {
        std::vector<std::string> claims;
        claims.reserve(corpus_.size());
        for (const auto& ex : corpus_) {
            claims.push_back(ex.claim);
        }
        index_ = Bm25Index(claims, params_);
    }

    std::size_t size() const noexcept { return corpus_.size(); }
    const Bm25Index& index() const noexcept { return index_; }

    /// Top `n_examples` train examples for a claim; empty corpus gives none.
    std::vector<TrainExample> select(std::string_view claim) const {
        std::vector<TrainExample> out;
        for (const auto& hit : index_.top(claim, params_.n_examples)) {
            out.push_back(corpus_[hit.index]);
        }
        return out;
    }

private:
    std::vector<TrainExample> corpus_;
    Bm25Params params_;
    Bm25Index index_;
};

} // namespace aicfc
