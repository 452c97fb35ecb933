// Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero if anything failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aicfc/aicfc.hpp"

#include "harness.hpp"
#include "oracles.hpp"
#include "prompt_sections.hpp"
#include "support.hpp"
#include "verdict_cases.hpp"

using namespace aicfc;
using namespace aicfc::testing;

namespace {

struct Failed {
    std::string why;
};

struct Skipped {
    std::string why;
};

void expect(bool ok, const std::string& what) {
    if (!ok) {
        throw Failed{what};
    }
}

class Clock {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<float> g;
    while (true) {
        std::vector<float> v(dim);
        for (auto& x : v) {
            x = g(rng);
        }
        try {
            return normalize(v).vector;
        } catch (const InvalidArgument&) {
        }
    }
}

Chunk chunk_for(std::int64_t claim, std::size_t i, std::mt19937_64& rng) {
    Chunk c;
    c.claim_id = claim;
    c.doc_index = static_cast<std::int64_t>(i / 3);
    c.chunk_index = static_cast<std::int64_t>(i % 3);
    c.url = "https://example.org/" + std::to_string(rng() % 1000) + "/é";
    c.text = "chunk " + std::to_string(i) + " \"quoted\" \n" + std::to_string(rng());
    c.context_before = i % 3 ? "prev " + std::to_string(i) : "";
    c.context_after = "next\t" + std::to_string(i);
    c.char_offset = static_cast<std::int64_t>(rng() % 100000);
    return c;
}

VectorStore random_store(std::mt19937_64& rng, std::int64_t claim, std::size_t n, std::size_t dim) {
    std::vector<Chunk> chunks;
    std::vector<Embedding> embeddings;
    for (std::size_t i = 0; i < n; ++i) {
        chunks.push_back(chunk_for(claim, i, rng));
        embeddings.push_back(Embedding{random_unit(rng, dim)});
    }
    return build_store(claim, std::move(chunks), embeddings);
}

std::vector<oracle::Vec> rows_of(const VectorStore& s) {
    std::vector<oracle::Vec> rows;
    for (std::size_t i = 0; i < s.count(); ++i) {
        rows.emplace_back(s.row(i).begin(), s.row(i).end());
    }
    return rows;
}

// 1 -------------------------------------------------------------------------
std::string mmr_equivalence() {
    const Clock clock;
    std::mt19937_64 rng(1001);
    const double lambdas[] = {0.0, 0.25, 0.75, 1.0};
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t n = 1 + rng() % 50;
        const std::size_t l = 1 + rng() % 10;
        const std::size_t dim = 2 + rng() % 31;
        const double lambda = lambdas[iter % 4];
        const auto store = random_store(rng, iter, n, dim);
        const auto query = random_unit(rng, dim);
        const auto hits = knn(store, query, n);
        const auto picked = mmr_select(query, hits, store, RetrievalParams{std::max(n, l), l, lambda});

        std::vector<oracle::Vec> candidates;
        for (const auto& h : hits) {
            candidates.emplace_back(store.row(h.row).begin(), store.row(h.row).end());
        }
        const auto expected = oracle::mmr(query, candidates, l, lambda);
        expect(picked.size() == expected.size(), "selection size differs at instance " + std::to_string(iter));
        for (std::size_t i = 0; i < picked.size(); ++i) {
            expect(picked[i].row == hits[expected[i].first].row && picked[i].mmr_score == expected[i].second,
                   "selection differs at instance " + std::to_string(iter));
            expect(picked[i].source_id == static_cast<int>(i + 1), "source ids not 1..l");
            if (lambda == 1.0) {
                expect(picked[i].row == hits[i].row, "lambda=1 is not similarity order");
            }
        }
    }
    const double s = clock.seconds();
    expect(s < 5.0, "took " + std::to_string(s) + " s");
    return "200 instances, " + std::to_string(s) + " s";
}

// 2 -------------------------------------------------------------------------
std::string knn_exactness() {
    const Clock clock;
    std::mt19937_64 rng(2002);
    for (int iter = 0; iter < 100; ++iter) {
        const std::size_t n = 1 + rng() % 500;
        const std::size_t dim = 1 + rng() % 64;
        const std::size_t k = 1 + rng() % (n + 5);
        const auto store = random_store(rng, iter, n, dim);
        const auto query = random_unit(rng, dim);
        const auto hits = knn(store, query, k);
        const auto expected = oracle::knn(rows_of(store), query, k);
        expect(hits.size() == expected.size(), "result size differs at store " + std::to_string(iter));
        for (std::size_t i = 0; i < hits.size(); ++i) {
            expect(hits[i].row == expected[i].first, "row order differs at store " + std::to_string(iter));
            expect(std::abs(hits[i].score - expected[i].second) <= 1e-6, "score differs at store " + std::to_string(iter));
        }
    }
    const double s = clock.seconds();
    expect(s < 10.0, "took " + std::to_string(s) + " s");
    return "100 stores, " + std::to_string(s) + " s";
}

// 3 -------------------------------------------------------------------------
std::string random_document(std::mt19937_64& rng) {
    static const std::vector<std::string> alphabet = {"a", "b", "c", " ", " ", "\n", "\n\n", "é", "東", "✓", "😀", "xyz"};
    const int kind = static_cast<int>(rng() % 4);
    const std::size_t n = kind == 3 ? 2000 + rng() % 6000 : rng() % 3000;
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        std::string piece = alphabet[rng() % alphabet.size()];
        if (kind == 1 && (piece == " " || piece == "\n" || piece == "\n\n")) {
            piece = "w"; // whitespace-free
        }
        if (kind == 2 && piece.size() == 1) {
            piece = "東"; // mostly multi-byte
        }
        s += piece;
    }
    return s;
}

std::u32string normalized(const std::u32string& text) {
    std::u32string out;
    std::u32string line;
    for (char32_t c : text + U'\n') {
        if (c != U'\n') {
            line.push_back(c);
        } else if (!line.empty()) {
            if (!out.empty()) {
                out.push_back(U'\n');
            }
            out += line;
            line.clear();
        }
    }
    return out;
}

std::string chunker_invariants() {
    std::mt19937_64 rng(3003);
    const ChunkingParams params{2048};
    std::size_t total_chunks = 0;
    for (int iter = 0; iter < 10000; ++iter) {
        const std::string text = random_document(rng);
        const auto chunks = chunk_document(DocumentRecord{1, "https://u", text, 0}, params);
        const auto decoded = oracle::decode(text);
        const auto expected = oracle::split(decoded, 2048);
        const std::string at = " in document " + std::to_string(iter);
        expect(chunks.size() == expected.size(), "chunk count differs" + at);
        std::u32string rebuilt;
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const auto& c = chunks[i];
            const auto len = utf8::length(c.text);
            expect(len >= 1 && len <= 2048, "length bound violated" + at);
            const auto piece = oracle::decode(c.text);
            expect(piece == expected[i], "chunk differs from reference splitter" + at);
            expect(c.chunk_index == static_cast<std::int64_t>(i), "chunk index" + at);
            expect(c.context_before == (i > 0 ? chunks[i - 1].text : std::string{}), "context_before" + at);
            expect(c.context_after == (i + 1 < chunks.size() ? chunks[i + 1].text : std::string{}), "context_after" + at);
            const auto offset = static_cast<std::size_t>(c.char_offset);
            expect(offset >= rebuilt.size() && offset - rebuilt.size() <= 1, "offset" + at);
            if (offset > rebuilt.size()) {
                rebuilt.push_back(U'\n');
            }
            rebuilt += piece;
        }
        expect(rebuilt == normalized(decoded), "reconstruction" + at);
        total_chunks += chunks.size();
    }
    return "10000 documents, " + std::to_string(total_chunks) + " chunks";
}

// 4 -------------------------------------------------------------------------
std::string persistence_round_trip() {
    std::mt19937_64 rng(4004);
    TempDir dir;
    for (int iter = 0; iter < 100; ++iter) {
        const auto store = random_store(rng, 1000 + iter, 1 + rng() % 200, 1 + rng() % 64);
        save_store(store, dir.path());
        const auto loaded = load_store(dir.path(), store.claim_id());
        expect(loaded.dim() == store.dim() && loaded.count() == store.count(), "shape differs");
        const auto a = store.matrix();
        const auto b = loaded.matrix();
        expect(a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0,
               "vectors not bit-exact for store " + std::to_string(iter));
        expect(loaded.metadata() == store.metadata(), "metadata differs for store " + std::to_string(iter));
    }
    return "100 stores";
}

// 5 -------------------------------------------------------------------------
std::string bm25_toy() {
    // N=3, df(a)=2, avgdl=5/3, k1=1.5, b=0.75, IDF(a)=ln(1.6)
    const Bm25Index index({"a b", "a a", "c"});
    const double idf = std::log(1.6);
    const double norm = 1.5 * (0.25 + 0.75 * 2.0 / (5.0 / 3.0));
    const double hand[] = {idf * 2.5 / (1.0 + norm), idf * 2.0 * 2.5 / (2.0 + norm), 0.0};
    double worst = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
        worst = std::max(worst, std::abs(index.score("a", d) - hand[d]));
    }
    expect(worst <= 1e-9, "max deviation " + std::to_string(worst));
    const auto ranked = index.rank_all("a");
    expect(ranked.size() == 3 && ranked[0].index == 1 && ranked[1].index == 0 && ranked[2].index == 2, "ranking order");
    std::ostringstream s;
    s << "max deviation " << worst;
    return s.str();
}

// 6 -------------------------------------------------------------------------
std::string parser_suite() {
    const std::vector<std::string> urls(10, "https://u");
    const auto report = parse_model_output(read_text(fixtures() / "reference_answer.txt"), urls);
    expect(report.final_label == Label::Refuted, "reference output is not Refuted");
    expect(report.scores.values == std::array<int, 4>{1, 5, 1, 1}, "reference scores differ");

    const auto corpus = malformed_outputs();
    expect(corpus.size() >= 20, "malformed corpus too small");
    std::size_t rejected = 0;
    for (const auto& raw : corpus) {
        try {
            (void)parse_model_output(raw, urls);
        } catch (const VerdictParseError&) {
            ++rejected;
        } catch (const std::exception& e) {
            throw Failed{std::string("unclassified failure: ") + e.what()};
        }
    }

    std::mt19937_64 rng(6006);
    const std::vector<std::string> pieces = {"<think>", "</think>", "x", "{\"a\": 1}", "```json\n", "\n```", " "};
    for (int iter = 0; iter < 5000; ++iter) {
        std::string raw;
        for (std::size_t i = rng() % 10; i > 0; --i) {
            raw += pieces[rng() % pieces.size()];
        }
        const auto once = strip_think(raw);
        const auto twice = strip_think(once.body);
        expect(twice.body == once.body && !twice.think_text, "think stripping is not idempotent");
    }
    return std::to_string(corpus.size()) + " malformed outputs (" + std::to_string(rejected) + " rejected)";
}

// 7 -------------------------------------------------------------------------
std::string end_to_end() {
    MockServer server;
    const std::string reply = ollama_reply(canned_answer(10));
    server.post("/api/chat", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(reply, "application/json");
    });
    server.start();

    std::vector<std::string> outputs;
    std::size_t worst_budget = 0;
    for (int run = 0; run < 3; ++run) {
        TempDir dir;
        auto cfg = fixture_run(dir.path());
        cfg.llm.endpoint_url = server.url("/api/chat");
        cfg.llm.max_retries = 0;
        cfg.workers = 4;
        const Pipeline pipeline = Pipeline::from_config(cfg);
        const auto pre = pipeline.precompute();
        expect(pre.built == 10 && pre.failures.empty(), "precompute failed");
        const int before = server.requests();
        const auto report = pipeline.verify_batch();
        expect(server.requests() - before == 10, "expected one chat call per claim, saw " +
                                                     std::to_string(server.requests() - before) + " for 10 claims");
        expect(report.status_counts.size() == 1 && report.status_counts.count("ok") == 1, "not every claim parsed");
        worst_budget = std::max(worst_budget, report.max_source_chars);
        outputs.push_back(read_text(cfg.paths.output));
    }
    expect(outputs[0] == outputs[1] && outputs[1] == outputs[2], "predictions differ between runs");
    expect(worst_budget <= 62000, "source budget " + std::to_string(worst_budget) + " chars");
    return "3 identical runs, max source chars " + std::to_string(worst_budget);
}

// 8 -------------------------------------------------------------------------
std::size_t occurrences(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        ++n;
    }
    return n;
}

std::string prompt_fidelity() {
    TempDir dir;
    auto cfg = fixture_run(dir.path());
    HashEmbedder embedder(cfg.embedder.dim);
    const Pipeline pipeline(cfg, std::make_shared<HashEmbedder>(cfg.embedder.dim),
                            std::make_shared<CannedChat>(canned_answer()));
    expect(pipeline.precompute().failures.empty(), "precompute failed");
    std::size_t checked = 0;
    for (const auto& claim : pipeline.claims()) {
        const auto store = load_store(cfg.paths.stores_dir, claim.claim_id);
        for (std::size_t l : {std::size_t{1}, std::size_t{4}, std::size_t{10}}) {
            const auto sources = retrieve_sources(claim.text, store, embedder, RetrievalParams{40, l, 0.75});
            const auto prompt = build_prompt(claim, sources, pipeline.fewshot().select(claim.text)).system;
            expect(prompt.starts_with(kHeader), "instruction header differs");
            expect(occurrences(prompt, kSchema) == 1, "output schema section differs");
            const std::size_t want = std::min(l, store.count());
            expect(sources.size() == want, "retrieved " + std::to_string(sources.size()) + " sources");
            expect(occurrences(prompt, "## Source ID: ") == want, "wrong number of source blocks");
            std::size_t last = 0;
            for (std::size_t id = 1; id <= want; ++id) {
                const auto pos = prompt.find("## Source ID: " + std::to_string(id) + " [");
                expect(pos != std::string::npos && pos > last, "source ids are not 1..l in order");
                last = pos;
            }
            ++checked;
        }
    }
    return std::to_string(checked) + " prompts";
}

// 9 -------------------------------------------------------------------------
std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

std::string live_smoke() {
    const auto embed_url = env_or("AICFC_LIVE_EMBED_URL", "");
    const auto llm_url = env_or("AICFC_LIVE_LLM_URL", "");
    if (embed_url.empty() || llm_url.empty()) {
        throw Skipped{"set AICFC_LIVE_EMBED_URL and AICFC_LIVE_LLM_URL to run"};
    }
    TempDir dir;
    auto cfg = fixture_run(dir.path(), {500, 501, 502, 503, 504});
    cfg.embedder_backend = EmbedderBackend::Http;
    cfg.embedder.endpoint_url = embed_url;
    cfg.embedder.model_name = env_or("AICFC_LIVE_EMBED_MODEL", cfg.embedder.model_name);
    cfg.embedder.dim = std::stoul(env_or("AICFC_LIVE_EMBED_DIM", std::to_string(cfg.embedder.dim)));
    cfg.llm.endpoint_url = llm_url;
    cfg.llm.model_name = env_or("AICFC_LIVE_LLM_MODEL", cfg.llm.model_name);
    cfg.llm.timeout_s = std::stod(env_or("AICFC_LIVE_LLM_TIMEOUT", "300"));
    const Pipeline pipeline = Pipeline::from_config(cfg);
    const auto pre = pipeline.precompute();
    expect(pre.failures.empty(), "precompute failed: " + (pre.failures.empty() ? "" : pre.failures.begin()->second));
    const auto report = pipeline.verify_batch();
    const std::size_t ok = report.status_counts.count("ok") ? report.status_counts.at("ok") : 0;
    std::ostringstream s;
    s << ok << "/5 parsed, mean " << report.mean_s << " s per claim, p95 " << report.p95_s << " s";
    expect(ok >= 4, s.str());
    return s.str();
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
        {"mmr matches brute-force oracle", mmr_equivalence},
        {"knn matches full scan", knn_exactness},
        {"chunker invariants", chunker_invariants},
        {"store persistence round-trip", persistence_round_trip},
        {"bm25 toy corpus", bm25_toy},
        {"verdict parser suite", parser_suite},
        {"end-to-end determinism", end_to_end},
        {"prompt fidelity", prompt_fidelity},
        {"live smoke test", live_smoke},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& [name, run] = criteria[i];
        std::string status;
        std::string detail;
        try {
            detail = run();
            status = "PASS";
        } catch (const Skipped& s) {
            status = "SKIP";
            detail = s.why;
        } catch (const Failed& f) {
            status = "FAIL";
            detail = f.why;
        } catch (const std::exception& e) {
            status = "FAIL";
            detail = std::string("exception: ") + e.what();
        }
        failures += status == "FAIL" ? 1 : 0;
        std::cout << status << "  " << (i + 1) << ". " << name << " (" << detail << ")" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
