#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "config.hpp"
#include "embed_client.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "fewshot.hpp"
#include "ingest.hpp"
#include "labels.hpp"
#include "llm.hpp"
#include "log.hpp"
#include "prompt.hpp"
#include "retrieve.hpp"
#include "vector_store.hpp"
#include "verdict.hpp"

namespace aicfc {

enum class PredictionStatus { Ok, ParseFallback, Error };

inline constexpr std::string_view status_name(PredictionStatus s) noexcept {
    switch (s) {
    case PredictionStatus::Ok:
        return "ok";
    case PredictionStatus::ParseFallback:
        return "parse_fallback";
    case PredictionStatus::Error:
        return "error";
    }
    return "error";
}

inline PredictionStatus status_from_string(std::string_view s) {
    if (s == "ok") {
        return PredictionStatus::Ok;
    }
    if (s == "parse_fallback") {
        return PredictionStatus::ParseFallback;
    }
    if (s == "error") {
        return PredictionStatus::Error;
    }
    throw FormatError("unknown prediction status \"" + std::string(s) + "\"");
}

struct Evidence {
    std::string question;
    std::string answer;
    std::string url;

    bool operator==(const Evidence&) const = default;
};

struct Timings {
    double retrieval_s = 0.0;
    double llm_s = 0.0;
    double total_s = 0.0;
};

struct Prediction {
    std::int64_t claim_id = 0;
    std::string claim;
    std::vector<Evidence> evidence;
    Label pred_label = Label::Refuted;
    PredictionStatus status = PredictionStatus::Ok;
    std::string failure; // reason when status != ok
    Timings timings;
    bool over_budget = false;
    std::size_t source_chars = 0;
    std::size_t prompt_chars = 0;
    int llm_calls = 0;
};

/// Submission record. With `diagnostics` the run-dependent fields (timings,
/// budget, call counts) are included as well.
inline nlohmann::json prediction_to_json(const Prediction& p, bool diagnostics = false) {
    nlohmann::json evidence = nlohmann::json::array();
    for (const auto& e : p.evidence) {
        evidence.push_back({{"question", e.question}, {"answer", e.answer}, {"url", e.url}});
    }
    nlohmann::json j{{"claim_id", p.claim_id},
                     {"claim", p.claim},
                     {"evidence", std::move(evidence)},
                     {"pred_label", label_name(p.pred_label)},
                     {"status", status_name(p.status)}};
    if (diagnostics) {
        j["failure"] = p.failure;
        j["timings"] = {{"retrieval_s", p.timings.retrieval_s},
                        {"llm_s", p.timings.llm_s},
                        {"total_s", p.timings.total_s}};
        j["over_budget"] = p.over_budget;
        j["source_chars"] = p.source_chars;
        j["prompt_chars"] = p.prompt_chars;
        j["llm_calls"] = p.llm_calls;
    }
    return j;
}

inline Prediction prediction_from_json(const nlohmann::json& j) {
    Prediction p;
    p.claim_id = j.at("claim_id").get<std::int64_t>();
    p.claim = j.at("claim").get<std::string>();
    for (const auto& e : j.at("evidence")) {
        p.evidence.push_back(Evidence{e.at("question").get<std::string>(), e.at("answer").get<std::string>(),
                                      e.at("url").get<std::string>()});
    }
    p.pred_label = label_from_string(j.at("pred_label").get<std::string>());
    p.status = status_from_string(j.value("status", std::string("ok")));
    p.failure = j.value("failure", std::string{});
    if (j.contains("timings")) {
        const auto& t = j["timings"];
        p.timings = Timings{t.value("retrieval_s", 0.0), t.value("llm_s", 0.0), t.value("total_s", 0.0)};
    }
    p.over_budget = j.value("over_budget", false);
    p.source_chars = j.value("source_chars", std::size_t{0});
    p.prompt_chars = j.value("prompt_chars", std::size_t{0});
    p.llm_calls = j.value("llm_calls", 0);
    return p;
}

struct PrecomputeReport {
    std::size_t built = 0;
    std::size_t skipped = 0;
    std::map<std::int64_t, std::size_t> chunks_per_claim; // rebuilt claims only
    std::map<std::int64_t, std::string> failures;
    double seconds = 0.0;
};

struct BatchReport {
    std::size_t predictions = 0;
    std::size_t processed = 0; // claims verified in this run
    std::size_t resumed = 0;   // claims taken from the partial output
    double mean_s = 0.0;       // over claims processed in this run
    double p95_s = 0.0;
    std::size_t max_source_chars = 0;
    std::size_t llm_calls = 0;
    std::map<std::string, std::size_t> status_counts;
};

/// Nearest-rank percentile; 0 for an empty sample.
inline double percentile(std::vector<double> values, double q) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

inline std::filesystem::path partial_output_path(const std::filesystem::path& output) {
    auto p = output;
    p += ".partial.jsonl";
    return p;
}

/// Run `fn(i)` for i in [0, n) on up to `workers` threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    std::atomic<std::size_t> next{0};
    const auto run = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            fn(i);
        }
    };
    const std::size_t threads = std::min(workers, n);
    if (threads <= 1) {
        run();
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back(run);
    }
}

/// Precompute and verify drivers over one claim set. The embedder and chat
/// client are shared by every worker.
class Pipeline {
public:
    Pipeline(RunConfig cfg, std::shared_ptr<Embedder> embedder, std::shared_ptr<ChatClient> chat,
             StageLog* log = nullptr)
        : cfg_(std::move(cfg)), embedder_(std::move(embedder)), chat_(std::move(chat)),
          log_(log != nullptr ? log : &null_log_) {
        cfg_.validate();
        std::vector<TrainExample> train;
        if (!cfg_.paths.train_set.empty()) {
            train = load_train_set(cfg_.paths.train_set, cfg_.train_fields);
        }
        fewshot_ = FewShotSelector(std::move(train), cfg_.bm25);
    }

    /// Services built from the config itself.
    static Pipeline from_config(RunConfig cfg, StageLog* log = nullptr) {
        std::shared_ptr<Embedder> embedder;
        if (cfg.embedder_backend == EmbedderBackend::Hash) {
            embedder = std::make_shared<HashEmbedder>(cfg.embedder.dim);
        } else {
            embedder = std::make_shared<HttpEmbedder>(cfg.embedder);
        }
        auto chat = std::make_shared<HttpChatClient>(cfg.llm);
        return Pipeline(std::move(cfg), std::move(embedder), std::move(chat), log);
    }

    const RunConfig& config() const noexcept { return cfg_; }
    const FewShotSelector& fewshot() const noexcept { return fewshot_; }

    std::vector<Claim> claims() const { return load_claims(cfg_.paths.claims, cfg_.claim_fields); }

    /// Chunk, embed and persist one claim's knowledge store.
    std::size_t build_claim_store(std::int64_t claim_id) const {
        const auto docs = load_knowledge_store(cfg_.paths.knowledge_store_dir / (std::to_string(claim_id) + ".json"),
                                               claim_id, cfg_.store_fields);
        auto chunks = build_chunks(docs, cfg_.chunking);
        if (chunks.empty()) {
            throw InvalidArgument("empty store: claim " + std::to_string(claim_id) + " has no chunks");
        }
        std::vector<std::string> texts;
        texts.reserve(chunks.size());
        for (const auto& c : chunks) {
            texts.push_back(c.text);
        }
        const auto embeddings = embed_texts(*embedder_, texts);
        const std::size_t n = chunks.size();
        save_store(build_store(claim_id, std::move(chunks), embeddings), cfg_.paths.stores_dir);
        return n;
    }

    /// Builds missing or unreadable stores (all of them with `force`).
    PrecomputeReport precompute(bool force = false) const {
        const Stopwatch total;
        const auto claims = this->claims();
        PrecomputeReport report;
        std::mutex mutex;
        parallel_for(claims.size(), cfg_.workers, [&](std::size_t i) {
            const auto id = claims[i].claim_id;
            const Stopwatch watch;
            if (!force && store_is_valid(id)) {
                std::lock_guard lock(mutex);
                ++report.skipped;
                return;
            }
            try {
                const std::size_t n = build_claim_store(id);
                log_->record(id, "precompute", watch.seconds(), {{"chunks", n}});
                std::lock_guard lock(mutex);
                ++report.built;
                report.chunks_per_claim[id] = n;
            } catch (const std::exception& e) {
                log_->record(id, "precompute", watch.seconds(), {{"error", e.what()}});
                std::lock_guard lock(mutex);
                report.failures[id] = e.what();
            }
        });
        report.seconds = total.seconds();
        return report;
    }

    /// Retrieval, prompting, one generation (plus parse retries) and parsing.
    /// Never throws: failures are encoded in the prediction status.
    Prediction verify_claim(const Claim& claim) const {
        const Stopwatch total;
        Prediction p;
        p.claim_id = claim.claim_id;
        p.claim = claim.text;
        p.pred_label = cfg_.fallback_label;

        const auto fail = [&](PredictionStatus status, const std::string& why) {
            p.status = status;
            p.failure = why;
            p.pred_label = cfg_.fallback_label;
            p.evidence.clear();
        };

        try {
            const Stopwatch retrieval;
            const VectorStore store = load_store(cfg_.paths.stores_dir, claim.claim_id);
            const auto sources = retrieve_sources(claim.text, store, *embedder_, cfg_.retrieval);
            p.timings.retrieval_s = retrieval.seconds();
            p.source_chars = source_budget(sources);
            log_->record(claim.claim_id, "retrieve", p.timings.retrieval_s,
                         {{"sources", sources.size()}, {"source_chars", p.source_chars}});

            const auto examples = fewshot_.select(claim.text);
            const auto prompt = build_prompt(claim, sources, examples, cfg_.claim_metadata);
            p.prompt_chars = prompt.char_count;

            std::vector<std::string> urls;
            urls.reserve(sources.size());
            for (const auto& s : sources) {
                urls.push_back(s.chunk.url);
            }

            const Stopwatch generation;
            std::optional<VerdictReport> report;
            std::string parse_error;
            for (int attempt = 0; attempt <= cfg_.parse_retries && !report; ++attempt) {
                const auto reply = chat_->chat(prompt.system, prompt.user);
                ++p.llm_calls;
                try {
                    report = parse_model_output(reply.text, urls);
                } catch (const VerdictParseError& e) {
                    parse_error = e.what();
                }
            }
            p.timings.llm_s = generation.seconds();
            log_->record(claim.claim_id, "generate", p.timings.llm_s, {{"calls", p.llm_calls}});

            if (report) {
                p.pred_label = report->final_label;
                for (const auto& qa : report->qa) {
                    p.evidence.push_back(Evidence{qa.question, qa.answer, qa.url});
                }
            } else {
                fail(PredictionStatus::ParseFallback, parse_error);
            }
        } catch (const std::exception& e) {
            fail(PredictionStatus::Error, e.what());
        }
        p.timings.total_s = total.seconds();
        p.over_budget = p.timings.total_s > cfg_.per_claim_budget_s;
        log_->record(claim.claim_id, "verify", p.timings.total_s,
                     {{"status", status_name(p.status)}, {"over_budget", p.over_budget}});
        return p;
    }

    /// Verify every claim and write the sorted predictions array to
    /// paths.output. Each finished claim is appended to
    /// `<output>.partial.jsonl` first; `resume` reuses those records.
    BatchReport verify_batch(bool resume = false) const {
        const auto claims = this->claims();
        std::set<std::int64_t> known;
        for (const auto& c : claims) {
            known.insert(c.claim_id);
        }

        const auto journal_path = partial_output_path(cfg_.paths.output);
        std::map<std::int64_t, Prediction> done;
        if (resume && std::filesystem::exists(journal_path)) {
            done = read_journal(journal_path, known);
        }
        if (!cfg_.paths.output.parent_path().empty()) {
            std::filesystem::create_directories(cfg_.paths.output.parent_path());
        }
        std::ofstream journal(journal_path, resume ? std::ios::app | std::ios::binary
                                                   : std::ios::trunc | std::ios::binary);
        if (!journal) {
            throw IoError("cannot open " + journal_path.string());
        }

        std::vector<const Claim*> pending;
        for (const auto& c : claims) {
            if (!done.contains(c.claim_id)) {
                pending.push_back(&c);
            }
        }

        BatchReport report;
        report.resumed = done.size();
        std::mutex mutex;
        std::vector<double> durations;
        parallel_for(pending.size(), cfg_.workers, [&](std::size_t i) {
            Prediction p = verify_claim(*pending[i]);
            const std::string line = prediction_to_json(p, true).dump();
            std::lock_guard lock(mutex);
            journal << line << '\n';
            journal.flush();
            durations.push_back(p.timings.total_s);
            done[p.claim_id] = std::move(p);
        });
        journal.close();

        nlohmann::json out = nlohmann::json::array();
        for (const auto& [id, p] : done) {
            out.push_back(prediction_to_json(p));
            report.max_source_chars = std::max(report.max_source_chars, p.source_chars);
            report.llm_calls += static_cast<std::size_t>(p.llm_calls);
            ++report.status_counts[std::string(status_name(p.status))];
        }
        detail::write_file_atomic(cfg_.paths.output, out.dump(2) + "\n");

        report.predictions = done.size();
        report.processed = durations.size();
        if (!durations.empty()) {
            double sum = 0.0;
            for (double d : durations) {
                sum += d;
            }
            report.mean_s = sum / static_cast<double>(durations.size());
            report.p95_s = percentile(durations, 0.95);
        }
        return report;
    }

private:
    bool store_is_valid(std::int64_t claim_id) const {
        if (!store_exists(cfg_.paths.stores_dir, claim_id)) {
            return false;
        }
        try {
            return !load_store(cfg_.paths.stores_dir, claim_id).empty();
        } catch (const Error&) {
            return false;
        }
    }

    static std::map<std::int64_t, Prediction> read_journal(const std::filesystem::path& path,
                                                           const std::set<std::int64_t>& known) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw IoError("cannot open " + path.string());
        }
        std::map<std::int64_t, Prediction> done;
        std::string line;
        for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
            if (line.empty()) {
                continue;
            }
            const auto where = [&] {
                return "partial output " + path.string() + " line " + std::to_string(line_no) +
                       " is corrupt, refusing to resume";
            };
            Prediction p;
            try {
                p = prediction_from_json(nlohmann::json::parse(line));
            } catch (const std::exception& e) {
                throw FormatError(where() + ": " + e.what());
            }
            if (!known.contains(p.claim_id) || done.contains(p.claim_id)) {
                throw FormatError(where() + ": unexpected claim_id " + std::to_string(p.claim_id));
            }
            done.emplace(p.claim_id, std::move(p));
        }
        return done;
    }

    RunConfig cfg_;
    std::shared_ptr<Embedder> embedder_;
    std::shared_ptr<ChatClient> chat_;
    FewShotSelector fewshot_;
    StageLog null_log_;
    StageLog* log_;
};

// ---------------------------------------------------------------------------
// Label evaluation
// ---------------------------------------------------------------------------

struct LabelEvaluation {
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    std::array<std::array<std::size_t, 4>, 4> confusion{}; // [gold][pred]
    std::array<std::optional<double>, 4> precision{};      // empty when never predicted
    std::array<std::optional<double>, 4> recall{};         // empty when never gold
};

/// Exact-match label accuracy, confusion matrix and per-label precision and
/// recall. Both id sets must match exactly.
inline LabelEvaluation evaluate_labels(const std::map<std::int64_t, Label>& predicted,
                                       const std::map<std::int64_t, Label>& gold) {
    std::vector<std::int64_t> missing_pred;
    std::vector<std::int64_t> missing_gold;
    for (const auto& [id, _] : gold) {
        if (!predicted.contains(id)) {
            missing_pred.push_back(id);
        }
    }
    for (const auto& [id, _] : predicted) {
        if (!gold.contains(id)) {
            missing_gold.push_back(id);
        }
    }
    if (!missing_pred.empty() || !missing_gold.empty()) {
        const auto join = [](const std::vector<std::int64_t>& ids) {
            std::string s;
            for (auto id : ids) {
                s += (s.empty() ? "" : ",") + std::to_string(id);
            }
            return s.empty() ? std::string("none") : s;
        };
        throw FormatError("claim_id mismatch; missing predictions: " + join(missing_pred) +
                          "; missing gold: " + join(missing_gold));
    }

    LabelEvaluation ev;
    for (const auto& [id, g] : gold) {
        const Label p = predicted.at(id);
        ++ev.confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
        ev.correct += g == p ? 1 : 0;
        ++ev.total;
    }
    ev.accuracy = ev.total == 0 ? 0.0 : static_cast<double>(ev.correct) / static_cast<double>(ev.total);
    for (std::size_t l = 0; l < 4; ++l) {
        std::size_t col = 0;
        std::size_t row = 0;
        for (std::size_t o = 0; o < 4; ++o) {
            col += ev.confusion[o][l];
            row += ev.confusion[l][o];
        }
        if (col > 0) {
            ev.precision[l] = static_cast<double>(ev.confusion[l][l]) / static_cast<double>(col);
        }
        if (row > 0) {
            ev.recall[l] = static_cast<double>(ev.confusion[l][l]) / static_cast<double>(row);
        }
    }
    return ev;
}

namespace detail {

inline nlohmann::json read_json_array(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw FormatError(path.string() + " must hold a JSON array");
    }
    return doc;
}

} // namespace detail

/// Predictions file: array of {claim_id, pred_label}. Gold file: array of
/// claim records with `label`; ids come from `claim_id` when present,
/// otherwise from array position.
inline LabelEvaluation evaluate_label_files(const std::filesystem::path& predictions_path,
                                            const std::filesystem::path& gold_path,
                                            const ClaimFields& fields = {}) {
    std::map<std::int64_t, Label> predicted;
    for (const auto& item : detail::read_json_array(predictions_path)) {
        predicted[item.at("claim_id").get<std::int64_t>()] =
            label_from_string(item.at("pred_label").get<std::string>());
    }
    std::map<std::int64_t, Label> gold;
    const auto gold_doc = detail::read_json_array(gold_path);
    for (std::size_t i = 0; i < gold_doc.size(); ++i) {
        const auto& item = gold_doc[i];
        std::int64_t id = static_cast<std::int64_t>(i);
        if (!fields.id.empty() && item.contains(fields.id) && item[fields.id].is_number_integer()) {
            id = item[fields.id].get<std::int64_t>();
        }
        gold[id] = label_from_string(item.at(fields.label).get<std::string>());
    }
    return evaluate_labels(predicted, gold);
}

} // namespace aicfc
