#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "embedding.hpp"
#include "error.hpp"
#include "ingest.hpp"

namespace aicfc {

/// Per-claim flat matrix of unit-norm chunk embeddings; row i belongs to
/// metadata[i]. Immutable once built.
class VectorStore {
public:
    VectorStore() = default;

    VectorStore(std::int64_t claim_id, std::size_t dim, std::vector<float> matrix,
                std::vector<Chunk> metadata)
        : claim_id_(claim_id), dim_(dim), matrix_(std::move(matrix)), metadata_(std::move(metadata)) {
        if (dim_ == 0 || matrix_.size() != dim_ * metadata_.size()) {
            throw DimensionMismatch("matrix size does not match dim x count");
        }
    }

    std::int64_t claim_id() const noexcept { return claim_id_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t count() const noexcept { return metadata_.size(); }
    bool empty() const noexcept { return metadata_.empty(); }

    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(matrix_).subspan(i * dim_, dim_);
    }
    std::span<const float> matrix() const noexcept { return matrix_; }
    const Chunk& chunk(std::size_t i) const { return metadata_.at(i); }
    const std::vector<Chunk>& metadata() const noexcept { return metadata_; }

    bool operator==(const VectorStore&) const = default;

private:
    std::int64_t claim_id_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> matrix_;
    std::vector<Chunk> metadata_;
};

struct Hit {
    std::size_t row = 0;
    double score = 0.0; // cosine similarity
    Chunk chunk;
};

inline VectorStore build_store(std::int64_t claim_id, std::vector<Chunk> chunks,
                               const std::vector<Embedding>& embeddings) {
    if (chunks.empty()) {
        throw InvalidArgument("empty store: claim " + std::to_string(claim_id) + " has no chunks");
    }
    if (chunks.size() != embeddings.size()) {
        throw DimensionMismatch(std::to_string(chunks.size()) + " chunks vs " +
                                std::to_string(embeddings.size()) + " embeddings");
    }
    const std::size_t dim = embeddings.front().dim();
    std::vector<float> matrix;
    matrix.reserve(dim * embeddings.size());
    for (const auto& e : embeddings) {
        if (e.dim() != dim) {
            throw DimensionMismatch("embeddings do not share one dimension");
        }
        if (std::abs(l2_norm(e.vector) - 1.0) > 1e-3) {
            throw InvalidArgument("store rows must be unit-norm");
        }
        matrix.insert(matrix.end(), e.vector.begin(), e.vector.end());
    }
    return VectorStore(claim_id, dim, std::move(matrix), std::move(chunks));
}

/// Exact k nearest neighbours by dot product over the full matrix. Results are
/// sorted by score descending, ties by lower row.
inline std::vector<Hit> knn(const VectorStore& store, std::span<const float> query, std::size_t k) {
    if (query.size() != store.dim()) {
        throw DimensionMismatch("query dim " + std::to_string(query.size()) + " vs store dim " +
                                std::to_string(store.dim()));
    }
    if (k < 1) {
        throw InvalidArgument("k must be >= 1");
    }
    const std::size_t n = store.count();
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = dot(store.row(i), query);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(k, n);
    const auto better = [&](std::size_t a, std::size_t b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      better);
    std::vector<Hit> hits;
    hits.reserve(take);
    for (std::size_t r = 0; r < take; ++r) {
        hits.push_back(Hit{order[r], scores[order[r]], store.chunk(order[r])});
    }
    return hits;
}

// ---------------------------------------------------------------------------
// Persistence
//
// <claim_id>.vs:
//   "AICVS" 0x01 | u32 dim | u32 count | count*dim float32, all little-endian
// <claim_id>.meta.jsonl:
//   line i = metadata of row i
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 6> kStoreMagic = {'A', 'I', 'C', 'V', 'S', '\x01'};
inline constexpr std::size_t kStoreHeaderBytes = kStoreMagic.size() + 8;

struct StorePaths {
    std::filesystem::path vectors;
    std::filesystem::path metadata;
};

inline StorePaths store_paths(const std::filesystem::path& dir, std::int64_t claim_id) {
    const std::string stem = std::to_string(claim_id);
    return {dir / (stem + ".vs"), dir / (stem + ".meta.jsonl")};
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

inline std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    }
    return v;
}

inline nlohmann::json chunk_to_json(const Chunk& c) {
    return nlohmann::json{{"claim_id", c.claim_id},         {"doc_index", c.doc_index},
                          {"chunk_index", c.chunk_index},   {"text", c.text},
                          {"url", c.url},                   {"context_before", c.context_before},
                          {"context_after", c.context_after}, {"char_offset", c.char_offset}};
}

inline Chunk chunk_from_json(const nlohmann::json& j) {
    Chunk c;
    c.claim_id = j.at("claim_id").get<std::int64_t>();
    c.doc_index = j.at("doc_index").get<std::int64_t>();
    c.chunk_index = j.at("chunk_index").get<std::int64_t>();
    c.text = j.at("text").get<std::string>();
    c.url = j.at("url").get<std::string>();
    c.context_before = j.at("context_before").get<std::string>();
    c.context_after = j.at("context_after").get<std::string>();
    c.char_offset = j.value("char_offset", std::int64_t{0});
    return c;
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
            throw IoError("cannot write " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace detail

inline std::string encode_store_vectors(const VectorStore& store) {
    std::string out(kStoreMagic.begin(), kStoreMagic.end());
    detail::put_u32(out, static_cast<std::uint32_t>(store.dim()));
    detail::put_u32(out, static_cast<std::uint32_t>(store.count()));
    out.reserve(out.size() + store.matrix().size() * 4);
    for (float x : store.matrix()) {
        detail::put_u32(out, std::bit_cast<std::uint32_t>(x));
    }
    return out;
}

inline void save_store(const VectorStore& store, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto paths = store_paths(dir, store.claim_id());
    std::string meta;
    for (const auto& chunk : store.metadata()) {
        meta += detail::chunk_to_json(chunk).dump();
        meta.push_back('\n');
    }
    // Sidecar first: a crash in between leaves no .vs, so the store reads as absent.
    detail::write_file_atomic(paths.metadata, meta);
    detail::write_file_atomic(paths.vectors, encode_store_vectors(store));
}

inline VectorStore load_store(const std::filesystem::path& dir, std::int64_t claim_id) {
    const auto paths = store_paths(dir, claim_id);
    const std::string bytes = detail::read_file(paths.vectors);
    if (bytes.size() < kStoreHeaderBytes ||
        !std::equal(kStoreMagic.begin(), kStoreMagic.end(), bytes.begin())) {
        throw CorruptStore("corrupt store: bad magic or header in " + paths.vectors.string());
    }
    const std::uint32_t dim = detail::get_u32(bytes.data() + kStoreMagic.size());
    const std::uint32_t count = detail::get_u32(bytes.data() + kStoreMagic.size() + 4);
    const std::uint64_t expected =
        kStoreHeaderBytes + static_cast<std::uint64_t>(dim) * count * sizeof(float);
    if (dim == 0 || bytes.size() != expected) {
        throw CorruptStore("corrupt store: " + paths.vectors.string() + " holds " +
                           std::to_string(bytes.size()) + " bytes, header implies " +
                           std::to_string(expected));
    }
    std::vector<float> matrix(static_cast<std::size_t>(dim) * count);
    const char* p = bytes.data() + kStoreHeaderBytes;
    for (std::size_t i = 0; i < matrix.size(); ++i, p += 4) {
        matrix[i] = std::bit_cast<float>(detail::get_u32(p));
    }

    std::ifstream meta_in(paths.metadata, std::ios::binary);
    if (!meta_in) {
        throw IoError("cannot open " + paths.metadata.string());
    }
    std::vector<Chunk> metadata;
    metadata.reserve(count);
    std::string line;
    while (std::getline(meta_in, line)) {
        if (line.empty()) {
            continue;
        }
        try {
            metadata.push_back(detail::chunk_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw CorruptStore("corrupt store: sidecar line " + std::to_string(metadata.size() + 1) +
                               ": " + e.what());
        }
    }
    if (metadata.size() != count) {
        throw CorruptStore("corrupt store: sidecar has " + std::to_string(metadata.size()) +
                           " rows, binary has " + std::to_string(count));
    }
    return VectorStore(claim_id, dim, std::move(matrix), std::move(metadata));
}

inline bool store_exists(const std::filesystem::path& dir, std::int64_t claim_id) {
    const auto paths = store_paths(dir, claim_id);
    return std::filesystem::exists(paths.vectors) && std::filesystem::exists(paths.metadata);
}

} // namespace aicfc
