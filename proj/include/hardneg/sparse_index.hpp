#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/error.hpp"
#include "hardneg/ranking.hpp"
#include "hardneg/text.hpp"

namespace hardneg {

/// Okapi BM25 parameters; the defaults follow the Anserini lineage.
struct Bm25Params {
    double k1 = 0.82;
    double b = 0.68;
};

class NotIndexed : public Error {
public:
    explicit NotIndexed(const std::string& id) : Error("passage '" + id + "' is not indexed") {}
};

struct Posting {
    std::uint32_t doc = 0;  // ordinal into the index's passage table
    std::uint32_t tf = 0;
};

/// Okapi BM25 inverted index. Build is single-threaded; the built index is
/// immutable and safe for concurrent scoring and search.
///
/// score(q, d) = sum over query terms t of
///     idf(t) * tf * (k1+1) / (tf + k1 * (1 - b + b * len/avglen))
/// with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), which is never
/// negative, so zero-score passages can be dropped from rankings outright.
class InvertedIndex {
public:
    static InvertedIndex build(const CorpusStore& corpus, Bm25Params params = {});

    double score(const TokenStream& query, const std::string& passage_id) const;  // NotIndexed
    /// Top-k by score, descending, ties by ascending passage id. Passages
    /// scoring 0 are never returned, so the result may be shorter than k.
    std::vector<ScoredPassage> topk(const TokenStream& query, int k) const;

    const Bm25Params& params() const { return params_; }
    double avg_doc_length() const { return avg_doc_length_; }
    std::size_t corpus_size() const { return doc_ids_.size(); }
    std::size_t doc_length(const std::string& passage_id) const;
    /// Postings for one term as (passage_id, tf), ordered by ordinal.
    std::vector<std::pair<std::string, std::uint32_t>> postings(const std::string& term) const;

    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

private:
    double idf(std::size_t df) const;
    double term_doc_score(std::uint32_t tf, std::uint32_t doc_len, double idf_value) const;

    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::unordered_map<std::string, std::uint32_t> ordinal_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::map<std::string, std::vector<Posting>> postings_;
};

}  // namespace hardneg
