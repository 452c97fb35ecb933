#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace aicfc {

/// Unit-norm embedding vector.
struct Embedding {
    std::vector<float> vector;

    std::size_t dim() const noexcept { return vector.size(); }
    bool operator==(const Embedding&) const = default;
};

inline double l2_norm(std::span<const float> v) noexcept {
    double sum = 0.0;
    for (float x : v) {
        sum += static_cast<double>(x) * static_cast<double>(x);
    }
    return std::sqrt(sum);
}

inline double dot(std::span<const float> a, std::span<const float> b) noexcept {
    double sum = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

/// v / ||v||_2. Zero and non-finite vectors are rejected.
inline Embedding normalize(std::span<const float> v) {
    const double norm = l2_norm(v);
    if (!std::isfinite(norm)) {
        throw InvalidArgument("cannot normalize a vector with non-finite components");
    }
    if (norm == 0.0) {
        throw InvalidArgument("cannot normalize a zero vector");
    }
    Embedding out;
    out.vector.reserve(v.size());
    for (float x : v) {
        out.vector.push_back(static_cast<float>(static_cast<double>(x) / norm));
    }
    return out;
}

/// Anything that maps texts to unit-norm vectors of a fixed dimension.
class Embedder {
public:
    virtual ~Embedder() = default;

    /// One embedding per text, in input order.
    virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
    virtual std::size_t dim() const noexcept = 0;
};

/// Validates inputs, then delegates. Chunk metadata never reaches the
/// embedder: callers pass chunk texts only.
inline std::vector<Embedding> embed_texts(Embedder& embedder, std::span<const std::string> texts) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].empty()) {
            throw InvalidArgument("empty text at position " + std::to_string(i));
        }
    }
    if (texts.empty()) {
        return {};
    }
    auto out = embedder.embed(texts);
    if (out.size() != texts.size()) {
        throw EndpointError("embedder returned " + std::to_string(out.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
    }
    return out;
}

inline Embedding embed_one(Embedder& embedder, const std::string& text) {
    return std::move(embed_texts(embedder, std::span<const std::string>(&text, 1)).front());
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform in [-1, 1), bit-reproducible on every platform.
inline float unit_uniform(std::uint64_t& state) noexcept {
    const auto bits = splitmix64(state) >> 40; // 24 bits
    return static_cast<float>(bits) / static_cast<float>(1u << 23) - 1.0f;
}

} // namespace detail

/// Deterministic offline embedder. Each lowercase alphanumeric token maps to a
/// hash-seeded pseudo-random direction; a text embeds as the normalized sum of
/// its token directions, so texts sharing vocabulary land close together.
/// Texts without any token fall back to a direction seeded by the whole text.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 1024) : dim_(dim) {
        if (dim_ == 0) {
            throw InvalidArgument("embedding dim must be >= 1");
        }
    }

    std::vector<Embedding> embed(std::span<const std::string> texts) override {
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            out.push_back(embed_one(text));
        }
        return out;
    }

    std::size_t dim() const noexcept override { return dim_; }

    Embedding embed_one(std::string_view text) const {
        std::vector<float> acc(dim_, 0.0f);
        bool any = false;
        std::string token;
        const auto add = [&](std::string_view t) {
            std::uint64_t state = detail::fnv1a(t);
            for (auto& x : acc) {
                x += detail::unit_uniform(state);
            }
            any = true;
        };
        for (char c : text) {
            const auto u = static_cast<unsigned char>(c);
            if (std::isalnum(u)) {
                token.push_back(static_cast<char>(std::tolower(u)));
            } else if (!token.empty()) {
                add(token);
                token.clear();
            }
        }
        if (!token.empty()) {
            add(token);
        }
        if (!any) {
            add(text);
        }
        if (l2_norm(acc) == 0.0) {
            acc[0] = 1.0f;
        }
        return normalize(acc);
    }

private:
    std::size_t dim_;
};

} // namespace aicfc
