#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "claim.hpp"
#include "embed_client.hpp"
#include "error.hpp"
#include "fewshot.hpp"
#include "ingest.hpp"
#include "labels.hpp"
#include "llm.hpp"
#include "retrieve.hpp"

namespace aicfc {

struct RunPaths {
    std::filesystem::path claims;
    std::filesystem::path knowledge_store_dir;
    std::filesystem::path stores_dir;
    std::filesystem::path train_set; // optional; empty disables few-shot examples
    std::filesystem::path output;
};

/// Field names in the claims file. An empty `id` (or a record without it)
/// numbers claims by array position.
struct ClaimFields {
    std::string id = "claim_id";
    std::string text = "claim";
    std::string speaker = "speaker";
    std::string date = "claim_date";
    std::string reporting_source = "reporting_source";
    std::string label = "label";
};

enum class EmbedderBackend { Http, Hash };

struct RunConfig {
    RunPaths paths;
    ClaimFields claim_fields;
    KnowledgeStoreFields store_fields;
    TrainSetFields train_fields;
    ChunkingParams chunking;
    RetrievalParams retrieval;
    Bm25Params bm25;
    EmbedderBackend embedder_backend = EmbedderBackend::Http;
    EmbedderConfig embedder;
    LlmConfig llm;
    std::size_t workers = 1;
    double per_claim_budget_s = 60.0;
    bool claim_metadata = false;
    Label fallback_label = Label::Refuted;
    int parse_retries = 1;

    void validate() const {
        chunking.validate();
        retrieval.validate();
        bm25.validate();
        embedder.validate();
        llm.validate();
        if (workers < 1) {
            throw InvalidArgument("workers must be >= 1");
        }
        if (parse_retries < 0) {
            throw InvalidArgument("parse_retries must be >= 0");
        }
    }
};

namespace detail {

template <class T>
void read_into(const nlohmann::json& obj, const char* key, T& target) {
    if (obj.is_object() && obj.contains(key) && !obj[key].is_null()) {
        target = obj[key].get<T>();
    }
}

inline void read_path(const nlohmann::json& obj, const char* key, const std::filesystem::path& base,
                      std::filesystem::path& target) {
    if (obj.is_object() && obj.contains(key) && obj[key].is_string()) {
        std::filesystem::path p = obj[key].get<std::string>();
        target = p.is_relative() && !p.empty() ? base / p : p;
    }
}

inline void env_override(const char* name, std::string& target) {
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0') {
        target = v;
    }
}

} // namespace detail

/// Apply AICFC_EMBED_URL, AICFC_EMBED_TOKEN, AICFC_LLM_URL and AICFC_LLM_TOKEN.
inline void apply_env_overrides(RunConfig& cfg) {
    detail::env_override("AICFC_EMBED_URL", cfg.embedder.endpoint_url);
    detail::env_override("AICFC_EMBED_TOKEN", cfg.embedder.auth_token);
    detail::env_override("AICFC_LLM_URL", cfg.llm.endpoint_url);
    detail::env_override("AICFC_LLM_TOKEN", cfg.llm.auth_token);
}

/// Build a RunConfig from a parsed JSON config. Relative paths resolve
/// against `base_dir`. Unknown keys are ignored; absent keys keep defaults.
inline RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    RunConfig cfg;
    try {
        const auto section = [&](const char* key) { return j.value(key, nlohmann::json::object()); };

        const auto paths = section("paths");
        detail::read_path(paths, "claims", base_dir, cfg.paths.claims);
        detail::read_path(paths, "knowledge_store_dir", base_dir, cfg.paths.knowledge_store_dir);
        detail::read_path(paths, "stores_dir", base_dir, cfg.paths.stores_dir);
        detail::read_path(paths, "train_set", base_dir, cfg.paths.train_set);
        detail::read_path(paths, "output", base_dir, cfg.paths.output);

        const auto fields = section("claim_fields");
        detail::read_into(fields, "id", cfg.claim_fields.id);
        detail::read_into(fields, "text", cfg.claim_fields.text);
        detail::read_into(fields, "speaker", cfg.claim_fields.speaker);
        detail::read_into(fields, "date", cfg.claim_fields.date);
        detail::read_into(fields, "reporting_source", cfg.claim_fields.reporting_source);
        detail::read_into(fields, "label", cfg.claim_fields.label);

        const auto ks = section("knowledge_store_fields");
        detail::read_into(ks, "url", cfg.store_fields.url);
        detail::read_into(ks, "texts", cfg.store_fields.texts);

        const auto train = section("train_fields");
        detail::read_into(train, "claim", cfg.train_fields.claim);
        detail::read_into(train, "label", cfg.train_fields.label);
        detail::read_into(train, "questions", cfg.train_fields.questions);
        detail::read_into(train, "question", cfg.train_fields.question);
        detail::read_into(train, "answers", cfg.train_fields.answers);
        detail::read_into(train, "answer", cfg.train_fields.answer);
        detail::read_into(train, "answer_type", cfg.train_fields.answer_type);

        detail::read_into(section("chunking"), "max_chunk_chars", cfg.chunking.max_chunk_chars);

        const auto retrieval = section("retrieval");
        detail::read_into(retrieval, "k", cfg.retrieval.k);
        detail::read_into(retrieval, "l", cfg.retrieval.l);
        detail::read_into(retrieval, "lambda", cfg.retrieval.lambda);

        const auto fewshot = section("fewshot");
        detail::read_into(fewshot, "k1", cfg.bm25.k1);
        detail::read_into(fewshot, "b", cfg.bm25.b);
        detail::read_into(fewshot, "n_examples", cfg.bm25.n_examples);

        const auto emb = section("embedder");
        std::string backend = "http";
        detail::read_into(emb, "backend", backend);
        if (backend == "http") {
            cfg.embedder_backend = EmbedderBackend::Http;
        } else if (backend == "hash") {
            cfg.embedder_backend = EmbedderBackend::Hash;
        } else {
            throw InvalidArgument("embedder.backend must be \"http\" or \"hash\"");
        }
        detail::read_into(emb, "endpoint_url", cfg.embedder.endpoint_url);
        detail::read_into(emb, "model", cfg.embedder.model_name);
        detail::read_into(emb, "auth_token", cfg.embedder.auth_token);
        detail::read_into(emb, "dim", cfg.embedder.dim);
        detail::read_into(emb, "batch_size", cfg.embedder.batch_size);
        detail::read_into(emb, "timeout_s", cfg.embedder.timeout_s);
        detail::read_into(emb, "max_retries", cfg.embedder.max_retries);
        detail::read_into(emb, "retry_backoff_s", cfg.embedder.retry_backoff_s);
        detail::read_into(emb, "max_concurrency", cfg.embedder.max_concurrency);

        const auto llm = section("llm");
        detail::read_into(llm, "endpoint_url", cfg.llm.endpoint_url);
        detail::read_into(llm, "model", cfg.llm.model_name);
        detail::read_into(llm, "auth_token", cfg.llm.auth_token);
        detail::read_into(llm, "think", cfg.llm.think);
        if (llm.contains("think_control")) {
            cfg.llm.think_control = think_control_from_string(llm["think_control"].get<std::string>());
        }
        detail::read_into(llm, "temperature", cfg.llm.temperature);
        detail::read_into(llm, "max_output_tokens", cfg.llm.max_output_tokens);
        detail::read_into(llm, "timeout_s", cfg.llm.timeout_s);
        detail::read_into(llm, "max_retries", cfg.llm.max_retries);
        detail::read_into(llm, "retry_backoff_s", cfg.llm.retry_backoff_s);
        detail::read_into(llm, "max_concurrency", cfg.llm.max_concurrency);

        detail::read_into(j, "workers", cfg.workers);
        detail::read_into(j, "per_claim_budget_s", cfg.per_claim_budget_s);
        detail::read_into(j, "claim_metadata", cfg.claim_metadata);
        detail::read_into(j, "parse_retries", cfg.parse_retries);
        if (j.contains("fallback_label")) {
            cfg.fallback_label = label_from_string(j["fallback_label"].get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("config " + path.string() + ": " + e.what());
    }
    auto cfg = config_from_json(j, path.parent_path());
    apply_env_overrides(cfg);
    cfg.validate();
    return cfg;
}

namespace detail {

inline std::string string_field(const nlohmann::json& obj, const std::string& key) {
    if (key.empty() || !obj.contains(key) || !obj[key].is_string()) {
        return {};
    }
    return obj[key].get<std::string>();
}

} // namespace detail

/// Claims file: JSON array of objects. Claims with empty text are kept so the
/// verifier can still emit a (failed) prediction for them.
inline std::vector<Claim> load_claims(const std::filesystem::path& path, const ClaimFields& f = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open claims file " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("claims file " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw FormatError("claims file must be a JSON array");
    }
    std::vector<Claim> claims;
    std::set<std::int64_t> ids;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        if (!item.is_object()) {
            throw FormatError("claims entry " + std::to_string(i) + " is not an object");
        }
        Claim c;
        c.claim_id = static_cast<std::int64_t>(i);
        if (!f.id.empty() && item.contains(f.id) && item[f.id].is_number_integer()) {
            c.claim_id = item[f.id].get<std::int64_t>();
        }
        c.text = detail::string_field(item, f.text);
        c.speaker = detail::string_field(item, f.speaker);
        c.date = detail::string_field(item, f.date);
        c.reporting_source = detail::string_field(item, f.reporting_source);
        if (!ids.insert(c.claim_id).second) {
            throw FormatError("duplicate claim_id " + std::to_string(c.claim_id));
        }
        claims.push_back(std::move(c));
    }
    return claims;
}

} // namespace aicfc
