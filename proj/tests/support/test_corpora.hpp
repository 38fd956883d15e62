#pragma once

#include <string>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/rng.hpp"

namespace hardneg::testing {

/// Deterministic word-salad corpus: n passages over a small vocabulary,
/// optionally grouped into documents of `per_doc` passages.
inline CorpusStore random_corpus(std::size_t n, std::uint64_t seed, int words_per_passage = 12,
                                 int per_doc = 0) {
    static const std::vector<std::string> kWords = {
        "amber", "basin", "cedar", "delta", "ember",  "frost", "grove", "harbor",
        "inlet", "juniper", "kestrel", "lagoon", "meadow", "north", "orchid", "prairie",
        "quarry", "ridge", "summit", "thicket", "upland", "valley", "willow", "zephyr",
        "river", "stone", "cloud", "field", "light", "shadow"};
    Rng rng(seed);
    CorpusStore store;
    for (std::size_t i = 0; i < n; ++i) {
        Passage p;
        if (per_doc > 0) {
            p.doc_id = "doc" + std::to_string(i / static_cast<std::size_t>(per_doc));
            p.position = static_cast<int>(i % static_cast<std::size_t>(per_doc));
            p.passage_id = p.doc_id + "#" + std::to_string(p.position);
        } else {
            p.passage_id = "p" + std::to_string(i);
        }
        p.title = kWords[uniform_below(rng, kWords.size())] + " notes";
        std::string text;
        for (int w = 0; w < words_per_passage; ++w) {
            if (w > 0) text += ' ';
            text += kWords[uniform_below(rng, kWords.size())];
        }
        p.text = std::move(text);
        store.add(std::move(p));
    }
    return store;
}

}  // namespace hardneg::testing
