#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "embedding.hpp"
#include "error.hpp"
#include "ingest.hpp"
#include "mmr.hpp"
#include "utf8.hpp"
#include "vector_store.hpp"

namespace aicfc {

struct RetrievalParams {
    std::size_t k = 40;
    std::size_t l = 10;
    double lambda = 0.75;

    void validate() const {
        if (l < 1 || l > k) {
            throw InvalidArgument("retrieval requires 1 <= l <= k");
        }
        if (!(lambda >= 0.0 && lambda <= 1.0)) {
            throw InvalidArgument("MMR lambda must lie in [0, 1]");
        }
    }
};

/// A chunk chosen by MMR. `source_id` is the 1-based ID shown to the model.
struct RetrievedSource {
    int source_id = 0;
    std::size_t row = 0;
    Chunk chunk;
    double similarity = 0.0;
    double mmr_score = 0.0;
};

/// Diversify kNN hits down to `params.l` sources. Candidate-to-candidate
/// similarity uses the store rows, so nothing is re-embedded.
inline std::vector<RetrievedSource> mmr_select(std::span<const float> query, std::span<const Hit> hits,
                                               const VectorStore& store, const RetrievalParams& params) {
    params.validate();
    if (query.size() != store.dim()) {
        throw DimensionMismatch("query dim does not match store dim");
    }
    const auto picks = mmr_greedy(
        hits.size(), params.l, params.lambda, [&](std::size_t i) { return dot(store.row(hits[i].row), query); },
        [&](std::size_t i, std::size_t j) { return dot(store.row(hits[i].row), store.row(hits[j].row)); });

    std::vector<RetrievedSource> out;
    out.reserve(picks.size());
    for (const auto& pick : picks) {
        const Hit& hit = hits[pick.index];
        out.push_back(RetrievedSource{static_cast<int>(out.size() + 1), hit.row, hit.chunk, hit.score,
                                      pick.objective});
    }
    return out;
}

/// Embed the claim, take the k nearest chunks, keep l diverse ones.
inline std::vector<RetrievedSource> retrieve_sources(const std::string& claim_text, const VectorStore& store,
                                                     Embedder& embedder, const RetrievalParams& params = {}) {
    params.validate();
    if (store.empty()) {
        throw InvalidArgument("cannot retrieve from an empty store");
    }
    const Embedding query = embed_one(embedder, claim_text);
    const auto hits = knn(store, query.vector, params.k);
    return mmr_select(query.vector, hits, store, params);
}

/// Characters of source text handed to the model: chunk plus both contexts.
inline std::size_t source_budget(std::span<const RetrievedSource> sources) {
    std::size_t total = 0;
    for (const auto& s : sources) {
        total += utf8::length(s.chunk.text) + utf8::length(s.chunk.context_before) +
                 utf8::length(s.chunk.context_after);
    }
    return total;
}

} // namespace aicfc
