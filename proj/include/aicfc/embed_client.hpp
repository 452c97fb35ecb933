#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "embedding.hpp"
#include "error.hpp"
#include "http.hpp"

namespace aicfc {

struct EmbedderConfig {
    std::string endpoint_url = "http://localhost:11434/v1/embeddings";
    std::string model_name = "mxbai-embed-large";
    std::string auth_token;
    std::size_t dim = 1024;
    std::size_t batch_size = 32;
    double timeout_s = 60.0;
    int max_retries = 3;
    double retry_backoff_s = 0.5;
    std::size_t max_concurrency = 4;

    void validate() const {
        if (batch_size < 1) {
            throw InvalidArgument("embedder batch_size must be >= 1");
        }
        if (!(timeout_s > 0.0)) {
            throw InvalidArgument("embedder timeout_s must be > 0");
        }
        if (dim < 1) {
            throw InvalidArgument("embedder dim must be >= 1");
        }
    }
};

/// Client for an OpenAI-style embeddings endpoint:
///   request  {"model": ..., "input": [texts]}
///   response {"data": [{"index": i, "embedding": [...]}, ...]}
/// Vectors are normalized on arrival. One instance may be shared by workers;
/// in-flight requests are capped at `max_concurrency`.
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(EmbedderConfig cfg)
        : cfg_(std::move(cfg)), endpoint_(http::parse_endpoint(cfg_.endpoint_url)),
          inflight_(cfg_.max_concurrency) {
        cfg_.validate();
    }

    std::vector<Embedding> embed(std::span<const std::string> texts) override {
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (std::size_t start = 0; start < texts.size(); start += cfg_.batch_size) {
            const std::size_t n = std::min(cfg_.batch_size, texts.size() - start);
            auto batch = request(texts.subspan(start, n));
            out.insert(out.end(), std::make_move_iterator(batch.begin()),
                       std::make_move_iterator(batch.end()));
        }
        return out;
    }

    std::size_t dim() const noexcept override { return cfg_.dim; }
    const EmbedderConfig& config() const noexcept { return cfg_; }

private:
    std::vector<Embedding> request(std::span<const std::string> batch) {
        nlohmann::json body;
        body["model"] = cfg_.model_name;
        body["input"] = nlohmann::json::array();
        for (const auto& text : batch) {
            body["input"].push_back(text);
        }

        std::string reply;
        {
            http::SemaphoreGuard guard(inflight_);
            reply = http::post_json(endpoint_, body.dump(), {cfg_.timeout_s, cfg_.auth_token},
                                    {cfg_.max_retries, cfg_.retry_backoff_s});
        }
        return decode(reply, batch.size());
    }

    std::vector<Embedding> decode(const std::string& reply, std::size_t expected) const {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(reply);
        } catch (const nlohmann::json::parse_error& e) {
            throw EndpointError(std::string("embedding response is not JSON: ") + e.what());
        }
        const auto data = doc.find("data");
        if (data == doc.end() || !data->is_array() || data->size() != expected) {
            throw EndpointError("embedding response must carry " + std::to_string(expected) +
                                " entries in \"data\"");
        }
        std::vector<Embedding> out(expected);
        std::vector<bool> seen(expected, false);
        for (std::size_t pos = 0; pos < data->size(); ++pos) {
            const auto& item = (*data)[pos];
            std::size_t index = pos;
            if (item.contains("index")) {
                index = item.at("index").get<std::size_t>();
            }
            if (index >= expected || seen[index]) {
                throw EndpointError("embedding response has a bad or duplicate index");
            }
            const auto raw = item.at("embedding").get<std::vector<float>>();
            if (raw.size() != cfg_.dim) {
                throw DimensionMismatch("endpoint returned a " + std::to_string(raw.size()) +
                                        "-dim vector, configured dim is " + std::to_string(cfg_.dim));
            }
            out[index] = normalize(raw);
            seen[index] = true;
        }
        return out;
    }

    EmbedderConfig cfg_;
    http::Endpoint endpoint_;
    http::Semaphore inflight_;
};

} // namespace aicfc
