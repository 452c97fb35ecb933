#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "utf8.hpp"

namespace aicfc {

/// One knowledge-store document: a URL and its newline-joined text blocks.
struct DocumentRecord {
    std::int64_t claim_id = 0;
    std::string url;
    std::string text;
    std::int64_t doc_index = 0;

    bool operator==(const DocumentRecord&) const = default;
};

/// A slice of one document plus the full texts of its neighbours.
///
/// `char_offset` is the position (in scalar values) of the chunk inside the
/// document's normalized text, i.e. its non-empty lines joined by '\n'.
struct Chunk {
    std::int64_t claim_id = 0;
    std::int64_t doc_index = 0;
    std::int64_t chunk_index = 0;
    std::string text;
    std::string url;
    std::string context_before;
    std::string context_after;
    std::int64_t char_offset = 0;

    bool operator==(const Chunk&) const = default;
};

struct ChunkingParams {
    std::size_t max_chunk_chars = 2048;

    void validate() const {
        if (max_chunk_chars < 1) {
            throw InvalidArgument("max_chunk_chars must be >= 1");
        }
    }
};

/// Field names of a knowledge-store line.
struct KnowledgeStoreFields {
    std::string url = "url";
    std::string texts = "url2text";
};

inline std::string join_lines(const std::vector<std::string>& blocks) {
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0) {
            out.push_back('\n');
        }
        out += blocks[i];
    }
    return out;
}

/// Parse one knowledge-store line. `line_no` is only used in error messages.
inline DocumentRecord parse_document_line(std::string_view line, std::int64_t claim_id,
                                          std::int64_t line_no,
                                          const KnowledgeStoreFields& fields = {}) {
    const auto where = [&] { return "knowledge store line " + std::to_string(line_no + 1) + ": "; };
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(where() + e.what());
    }
    if (!obj.is_object()) {
        throw FormatError(where() + "expected an object");
    }
    const auto url = obj.find(fields.url);
    if (url == obj.end() || !url->is_string() || url->get_ref<const std::string&>().empty()) {
        throw FormatError(where() + "missing or empty \"" + fields.url + "\"");
    }
    const auto texts = obj.find(fields.texts);
    if (texts == obj.end() || !texts->is_array()) {
        throw FormatError(where() + "missing array \"" + fields.texts + "\"");
    }
    std::vector<std::string> blocks;
    blocks.reserve(texts->size());
    for (const auto& block : *texts) {
        if (!block.is_string()) {
            throw FormatError(where() + "non-string text block");
        }
        blocks.push_back(block.get<std::string>());
    }
    return DocumentRecord{claim_id, url->get<std::string>(), join_lines(blocks), line_no};
}

/// Load `<claim_id>.json`: one JSON object per line. Blank lines are skipped
/// but still count towards the line number used as doc_index.
inline std::vector<DocumentRecord> load_knowledge_store(const std::filesystem::path& path,
                                                        std::int64_t claim_id,
                                                        const KnowledgeStoreFields& fields = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open knowledge store " + path.string());
    }
    std::vector<DocumentRecord> docs;
    std::string line;
    for (std::int64_t line_no = 0; std::getline(in, line); ++line_no) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        docs.push_back(parse_document_line(line, claim_id, line_no, fields));
    }
    if (in.bad()) {
        throw IoError("read failure on " + path.string());
    }
    return docs;
}

namespace detail {

struct ChunkPiece {
    std::string_view text;
    std::size_t chars = 0;
    bool continuation = false; // hard-split tail of a longer line
};

// Non-empty lines, with lines longer than the limit cut into max-sized pieces
// on scalar boundaries.
inline std::vector<ChunkPiece> split_units(std::string_view text, std::size_t max_chars) {
    std::vector<ChunkPiece> units;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const std::string_view line = text.substr(start, end - start);
        if (!line.empty()) {
            const auto bounds = utf8::boundaries(line);
            const std::size_t chars = bounds.size() - 1;
            for (std::size_t c = 0; c < chars; c += max_chars) {
                const std::size_t stop = std::min(chars, c + max_chars);
                units.push_back(ChunkPiece{line.substr(bounds[c], bounds[stop] - bounds[c]),
                                           stop - c, c > 0});
            }
        }
        start = end + 1;
    }
    return units;
}

} // namespace detail

/// Greedy packing of a document's non-empty lines into chunks of at most
/// `max_chunk_chars` scalar values. Lines inside a chunk are joined by '\n';
/// a line longer than the limit is hard-split at exactly the limit.
inline std::vector<Chunk> chunk_document(const DocumentRecord& doc, const ChunkingParams& params = {}) {
    params.validate();
    const std::size_t limit = params.max_chunk_chars;
    std::vector<Chunk> chunks;

    std::string current;
    std::size_t current_chars = 0;
    std::size_t current_offset = 0;
    std::size_t cursor = 0; // offset of the next unit in normalized text

    const auto flush = [&] {
        Chunk chunk;
        chunk.claim_id = doc.claim_id;
        chunk.doc_index = doc.doc_index;
        chunk.chunk_index = static_cast<std::int64_t>(chunks.size());
        chunk.text = std::move(current);
        chunk.url = doc.url;
        chunk.char_offset = static_cast<std::int64_t>(current_offset);
        chunks.push_back(std::move(chunk));
        current.clear();
        current_chars = 0;
    };

    bool first = true;
    for (const auto& unit : detail::split_units(doc.text, limit)) {
        if (!first && !unit.continuation) {
            ++cursor; // the '\n' separating two lines
        }
        first = false;
        if (current_chars > 0 && !unit.continuation && current_chars + 1 + unit.chars <= limit) {
            current.push_back('\n');
            current.append(unit.text);
            current_chars += 1 + unit.chars;
        } else {
            if (current_chars > 0) {
                flush();
            }
            current.assign(unit.text);
            current_chars = unit.chars;
            current_offset = cursor;
        }
        cursor += unit.chars;
    }
    if (current_chars > 0) {
        flush();
    }

    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (i > 0) {
            chunks[i].context_before = chunks[i - 1].text;
        }
        if (i + 1 < chunks.size()) {
            chunks[i].context_after = chunks[i + 1].text;
        }
    }
    return chunks;
}

inline std::vector<Chunk> build_chunks(const std::vector<DocumentRecord>& docs,
                                       const ChunkingParams& params = {}) {
    std::vector<Chunk> out;
    for (const auto& doc : docs) {
        auto chunks = chunk_document(doc, params);
        out.insert(out.end(), std::make_move_iterator(chunks.begin()),
                   std::make_move_iterator(chunks.end()));
    }
    return out;
}

/// The text chunk_document reconstructs to: non-empty lines joined by '\n'.
inline std::string normalized_text(std::string_view text) {
    std::string out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        if (end > start) {
            if (!out.empty()) {
                out.push_back('\n');
            }
            out.append(text.substr(start, end - start));
        }
        start = end + 1;
    }
    return out;
}

} // namespace aicfc
