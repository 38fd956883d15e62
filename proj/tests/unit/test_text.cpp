#include <doctest.h>

#include "hardneg/corpus.hpp"
#include "hardneg/rng.hpp"
#include "hardneg/text.hpp"

using namespace hardneg;

TEST_CASE("tokenize lowercases and strips punctuation") {
    const TokenStream s = tokenize("Never Be the Same!");
    CHECK(s.tokens == std::vector<std::string>{"never", "be", "the", "same"});
}

TEST_CASE("tokenize of empty input is empty") {
    const TokenStream s = tokenize("");
    CHECK(s.tokens.empty());
    CHECK(s.source_length == 0);
}

TEST_CASE("tokenize golden pins") {
    // Frozen outputs of the digit-preserving rule.
    CHECK(tokenize("k1=0.82").tokens == std::vector<std::string>{"k1", "0.82"});
    CHECK(tokenize("BM25, b=0.68.").tokens == std::vector<std::string>{"bm25", "b", "0.68"});
    CHECK(tokenize("3.14.15").tokens == std::vector<std::string>{"3.14.15"});
    CHECK(tokenize("end. Start").tokens == std::vector<std::string>{"end", "start"});
    CHECK(tokenize("1. item").tokens == std::vector<std::string>{"1", "item"});
    CHECK(tokenize("it's a co-op").tokens == std::vector<std::string>{"it", "s", "a", "co", "op"});
}

TEST_CASE("tokenize folds accented latin and full-width forms") {
    CHECK(tokenize("Café").tokens == std::vector<std::string>{"cafe"});
    CHECK(tokenize("Strauß").tokens == std::vector<std::string>{"strauss"});
    CHECK(tokenize("ＡＢＣ １２").tokens == std::vector<std::string>{"abc", "12"});
    CHECK(tokenize("naïve œuvre").tokens == std::vector<std::string>{"naive", "oeuvre"});
}

TEST_CASE("tokenize counts source code points") {
    CHECK(tokenize("abc").source_length == 3);
    CHECK(tokenize("Café").source_length == 4);
}

TEST_CASE("tokenize is deterministic") {
    const std::string input = "The K1=0.82 setting; naïve—test";
    CHECK(tokenize(input).tokens == tokenize(input).tokens);
}

TEST_CASE("contains_answer_span finds contiguous token sequences") {
    Passage p;
    p.passage_id = "p1";
    p.text = "a song by Cuban-American singer Camila Cabello from her debut album";

    CHECK(contains_answer_span(p, {"Camila Cabello"}));
    CHECK(contains_answer_span(p, {"wrong", "camila cabello!"}));
    CHECK_FALSE(contains_answer_span(p, {"Cabello Camila"}));

    Passage only_first;
    only_first.text = "camila sings on the record";
    CHECK_FALSE(contains_answer_span(only_first, {"Camila Cabello"}));
}

TEST_CASE("answer equal to the full passage text matches") {
    Passage p;
    p.text = "Never Be the Same";
    CHECK(contains_answer_span(p, {p.text}));
}

TEST_CASE("span containment is invariant to case and punctuation") {
    const std::string base = "the quick brown fox jumps over the lazy dog";
    Passage p;
    p.text = "THE, Quick? brown FOX; (jumps) over... the Lazy dog";
    CHECK(contains_answer_span(p, {"quick brown fox"}));
    CHECK(contains_answer_span(p, {"Quick! Brown. Fox"}));
    CHECK(contains_answer_span(p, {base}));
    CHECK_FALSE(contains_answer_span(p, {"quick fox"}));
}

TEST_CASE("contains_answer_span(p, [p.text]) holds for random passages") {
    Rng rng(99);
    static const std::vector<std::string> words = {"Alpha", "beta!", "Gamma", "delta", "k1=0.82"};
    for (int trial = 0; trial < 50; ++trial) {
        std::string text;
        const int len = 1 + static_cast<int>(uniform_below(rng, 8));
        for (int i = 0; i < len; ++i) {
            if (i) text += ' ';
            text += words[uniform_below(rng, words.size())];
        }
        Passage p;
        p.text = text;
        CHECK(contains_answer_span(p, {text}));
    }
}

TEST_CASE("tokenization is idempotent over its own output") {
    Rng rng(123);
    static const std::vector<std::string> pieces = {"Hello,", "WORLD",  "k1=0.82", "naïve",
                                                    "3.14",   "x;y",    "end.",    "ＡＢ",
                                                    "mid.dle", "a1b2c3", "—dash—", "(paren)"};
    for (int trial = 0; trial < 60; ++trial) {
        std::string input;
        const int len = 1 + static_cast<int>(uniform_below(rng, 8));
        for (int i = 0; i < len; ++i) {
            if (i) input += ' ';
            input += pieces[uniform_below(rng, pieces.size())];
        }
        const TokenStream once = tokenize(input);
        std::string joined;
        for (const auto& tok : once.tokens) {
            if (!joined.empty()) joined += ' ';
            joined += tok;
        }
        CHECK(tokenize(joined).tokens == once.tokens);
    }
}
