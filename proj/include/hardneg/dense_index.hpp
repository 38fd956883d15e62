#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/encoder.hpp"
#include "hardneg/ranking.hpp"

namespace hardneg {

/// Exact maximum-dot-product top-k over a row-major matrix: score descending,
/// ties by ascending id. Rows need not be unit norm (fused ensembles use this
/// directly).
std::vector<ScoredPassage> mips_topk(std::span<const double> matrix,
                                     const std::vector<std::string>& ids, int dim,
                                     std::span<const double> query, int k);

/// Passage embeddings with exact full-scan search as the contract. Immutable
/// after build; concurrent searches are safe.
class DenseIndex {
public:
    /// One embedding per corpus passage, in corpus order. A degenerate
    /// passage embedding aborts the build, naming the passage.
    static DenseIndex build(const CorpusStore& corpus, const EncoderParams& params, int threads = 1);
    /// Wraps precomputed rows; every row must be unit norm within 1e-6.
    static DenseIndex from_rows(std::vector<std::string> ids, std::vector<double> matrix, int dim);

    std::vector<ScoredPassage> search(const Embedding& query, int k) const;  // DimMismatch
    std::vector<std::vector<ScoredPassage>> search_batch(const std::vector<Embedding>& queries,
                                                         int k, int threads = 1) const;

    std::size_t size() const { return ids_.size(); }
    int dim() const { return dim_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<double>& matrix() const { return matrix_; }
    std::span<const double> row(std::size_t i) const;

    /// Binary layout: magic, version, n, D header; n*D little-endian float32
    /// rows; then the id table.
    void save(const std::filesystem::path& path) const;
    static DenseIndex load(const std::filesystem::path& path);

private:
    std::vector<std::string> ids_;
    std::vector<double> matrix_;  // n x dim, row-major
    int dim_ = 0;
};

}  // namespace hardneg
