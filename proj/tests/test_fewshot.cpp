#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include "aicfc/fewshot.hpp"

#include "oracles.hpp"
#include "support.hpp"

using namespace aicfc;
using aicfc::testing::TempDir;
using aicfc::testing::write_text;

namespace {

TrainExample example(std::string claim, Label label = Label::Supported) {
    return TrainExample{std::move(claim), label, {{"q?", "a.", "Extractive"}}};
}

} // namespace

TEST_CASE("tokenize", "[fewshot]") {
    CHECK(tokenize("Imran Khan's critique!") == std::vector<std::string>{"imran", "khan", "s", "critique"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("A-B a b") == std::vector<std::string>{"a", "b", "a", "b"});
    CHECK(tokenize("Café 2020, naïve") == std::vector<std::string>{"café", "2020", "naïve"});
}

TEST_CASE("BM25 toy corpus against hand-evaluated values", "[fewshot][bm25]") {
    // N=3, df(a)=2, avgdl=5/3, k1=1.5, b=0.75; IDF(a)=ln(1.6).
    //   "a b": ln(1.6) * 2.5 / (1 + 1.5*(0.25 + 0.75*2/(5/3))) = 0.43119599013370247
    //   "a a": ln(1.6) * 2*2.5 / (2 + 1.5*(0.25 + 0.75*2/(5/3))) = 0.6308773546922626
    const Bm25Index index({"a b", "a a", "c"});
    CHECK(index.score("a", 0) == Catch::Approx(0.43119599013370247).margin(1e-12));
    CHECK(index.score("a", 1) == Catch::Approx(0.6308773546922626).margin(1e-12));
    CHECK(index.score("a", 2) == 0.0);

    const auto ranked = bm25_rank({example("a b"), example("a a"), example("c")}, "a", Bm25Params{1.5, 0.75, 3});
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].example.claim == "a a");
    CHECK(ranked[1].example.claim == "a b");
    CHECK(ranked[2].example.claim == "c");
}

TEST_CASE("BM25 ranking rules", "[fewshot][bm25]") {
    SECTION("only overlapping document ranks first") {
        const auto ranked = bm25_rank({example("tax rises in kenya"), example("moon landing india"),
                                       example("eiffel tower sold")},
                                      "The moon landing in India", Bm25Params{1.5, 0.75, 1});
        REQUIRE(ranked.size() == 1);
        CHECK(ranked[0].example.claim == "moon landing india");
    }
    SECTION("zero overlap keeps corpus order") {
        const auto ranked = bm25_rank({example("one"), example("two"), example("three"), example("four")},
                                      "unrelated", Bm25Params{1.5, 0.75, 3});
        REQUIRE(ranked.size() == 3);
        CHECK(ranked[0].example.claim == "one");
        CHECK(ranked[1].example.claim == "two");
        CHECK(ranked[2].example.claim == "three");
        for (const auto& r : ranked) {
            CHECK(r.score == 0.0);
        }
    }
    SECTION("parameter validation") {
        CHECK_THROWS_AS(Bm25Params({0.0, 0.75, 3}).validate(), InvalidArgument);
        CHECK_THROWS_AS(Bm25Params({1.5, 1.5, 3}).validate(), InvalidArgument);
        CHECK_THROWS_AS(Bm25Params({1.5, 0.75, 0}).validate(), InvalidArgument);
    }
}

TEST_CASE("BM25 agrees with the formula oracle on random corpora", "[fewshot][bm25][property]") {
    std::mt19937_64 rng(21);
    const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
    std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
    std::uniform_int_distribution<int> len(0, 12);
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<std::string> docs;
        std::vector<std::vector<std::string>> tokens;
        const int n = 1 + iter % 9;
        for (int d = 0; d < n; ++d) {
            std::string text;
            std::vector<std::string> toks;
            const int l = len(rng);
            for (int i = 0; i < l; ++i) {
                toks.push_back(vocab[word(rng)]);
                text += (i ? " " : "") + toks.back();
            }
            docs.push_back(text);
            tokens.push_back(toks);
        }
        const std::vector<std::string> query = {vocab[word(rng)], vocab[word(rng)]};
        const Bm25Index index(docs);
        for (int d = 0; d < n; ++d) {
            const double expected = index.average_length() > 0 ? oracle::bm25(tokens, query, d, 1.5, 0.75) : 0.0;
            const double got = index.score(query[0] + " " + query[1], d);
            REQUIRE(got == Catch::Approx(expected).margin(1e-9));
            REQUIRE(got >= 0.0);
        }
    }
}

TEST_CASE("adding a non-overlapping average-length document keeps the order", "[fewshot][bm25][property]") {
    // With a single query term the IDF is a common factor, and an
    // average-length addition leaves avgdl alone, so relative order is fixed.
    std::mt19937_64 rng(22);
    const std::vector<std::string> vocab = {"x", "y", "z", "w"};
    std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<std::string> docs;
        std::size_t total = 0;
        for (int d = 0; d < 6; ++d) {
            std::string text;
            for (int i = 0; i < 4 + d % 3; ++i) {
                text += vocab[word(rng)] + " ";
            }
            total += 4 + d % 3;
            docs.push_back(text);
        }
        const Bm25Index before(docs);
        if (total % docs.size() != 0) {
            continue;
        }
        std::string filler;
        for (std::size_t i = 0; i < total / docs.size(); ++i) {
            filler += "unrelated ";
        }
        auto extended = docs;
        extended.push_back(filler);
        const Bm25Index after(extended);
        REQUIRE(after.average_length() == before.average_length());

        const auto a = before.rank_all("x");
        auto b = after.rank_all("x");
        std::erase_if(b, [&](const ScoredDoc& s) { return s.index == docs.size(); });
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(a[i].index == b[i].index);
        }
    }
}

TEST_CASE("load_train_set", "[fewshot]") {
    TempDir dir;
    write_text(dir / "train.json", R"([
      {"claim": "c1", "label": "Refuted", "questions": [
        {"question": "q1?", "answers": [{"answer": "No", "answer_type": "Boolean"}, {"answer": "Also no", "answer_type": "Abstractive"}]},
        {"question": "q2?", "answers": [{"answer": "", "answer_type": "Extractive"}]}
      ]},
      {"claim": "c2", "label": "Supported", "questions": []},
      {"claim": "c3", "label": "Conflicting Evidence/Cherrypicking", "questions": [
        {"question": "q3?", "answers": [{"answer": "x", "answer_type": "Weird"}, {"answer": "y", "answer_type": "Unanswerable"}]}
      ]}
    ])");
    const auto train = load_train_set(dir / "train.json");
    REQUIRE(train.size() == 2);
    CHECK(train[0].gold_label == Label::Refuted);
    REQUIRE(train[0].qa_pairs.size() == 2);
    CHECK(train[0].qa_pairs[0] == QaExample{"q1?", "No", "Boolean"});
    CHECK(train[1].gold_label == Label::Conflicting);
    REQUIRE(train[1].qa_pairs.size() == 1);
    CHECK(train[1].qa_pairs[0].answer_type == "Unanswerable");

    write_text(dir / "bad.json", R"([{"claim": "c", "label": "Maybe"}])");
    CHECK_THROWS_AS(load_train_set(dir / "bad.json"), FormatError);
}

TEST_CASE("few-shot selector over the fixture train set", "[fewshot][fixture]") {
    FewShotSelector selector(load_train_set(aicfc::testing::fixtures() / "train.json"));
    CHECK(selector.size() == 12);
    const auto picked = selector.select("Drinking hot water kills the coronavirus");
    REQUIRE(picked.size() == 3);
    CHECK(picked[0].claim == "Garlic water cures coronavirus infections within a day.");
    CHECK(selector.select("x").size() == 3);
    CHECK(FewShotSelector{}.select("anything").empty());
}
