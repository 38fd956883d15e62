#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace hardneg {

struct ScoredPassage {
    std::string passage_id;
    double score = 0.0;
};

/// Ordered retrieval result for one query: score descending, ties broken by
/// ascending passage id. Every producer (BM25, dense, fusion) uses the same
/// ordering rule so rankings are comparable bit-for-bit.
struct Ranking {
    std::string query_key;
    std::vector<ScoredPassage> hits;
};

inline bool rank_less(const ScoredPassage& a, const ScoredPassage& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.passage_id < b.passage_id;
}

inline void sort_hits(std::vector<ScoredPassage>& hits) {
    std::sort(hits.begin(), hits.end(), rank_less);
}

inline void truncate_hits(std::vector<ScoredPassage>& hits, std::size_t k) {
    if (hits.size() > k) hits.resize(k);
}

}  // namespace hardneg
