#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hardneg/dense_index.hpp"
#include "hardneg/error.hpp"
#include "hardneg/eval.hpp"
#include "hardneg/ranking.hpp"

namespace hardneg {

class SpecMismatch : public Error {
public:
    explicit SpecMismatch(const std::string& why) : Error("fusion spec mismatch: " + why) {}
};

class EmptyGrid : public Error {
public:
    EmptyGrid() : Error("coefficient grid is empty") {}
};

/// How to combine models trained with different hard negatives: per-member
/// coefficients for embedding fusion, and the constant for rank fusion.
struct FusionSpec {
    std::vector<std::string> members;
    std::vector<double> coefficients;
    double rrf_k = 60.0;

    void validate() const;
    void save(const std::filesystem::path& path) const;
    static FusionSpec load(const std::filesystem::path& path);
};

/// Concatenation of coefficient-scaled member vectors. Applied identically
/// to questions and passages, so the fused dot product equals
/// sum_m alpha_m^2 * (q_m . p_m). Deliberately not re-normalized.
std::vector<double> fuse_embedding(const std::vector<std::vector<double>>& member_vectors,
                                   const FusionSpec& spec);

/// Fused passage matrix over members built from the same corpus (identical
/// id sequences required). Rows are generally not unit norm.
struct FusedIndex {
    std::vector<std::string> ids;
    std::vector<double> matrix;  // n x dim, row-major
    int dim = 0;
};
FusedIndex build_fused_index(const std::vector<const DenseIndex*>& members, const FusionSpec& spec);
std::vector<ScoredPassage> fused_search(const FusedIndex& index,
                                        const std::vector<double>& fused_query, int k);

/// Reciprocal rank fusion: score(d) = sum over members containing d of
/// 1 / (rrf_k + rank_m(d)) with 1-based ranks; descending, ties by id.
Ranking rrf_fusion(const std::vector<Ranking>& member_rankings, const FusionSpec& spec);

/// Exhaustive grid search over per-member coefficients maximizing dev Top-1
/// accuracy (span judgments) or MRR@10 (graded judgments). Ties break toward
/// uniform coefficients, then lexicographically.
FusionSpec tune_coefficients(const std::vector<std::string>& members,
                             const std::vector<std::vector<Embedding>>& dev_queries_per_member,
                             const std::vector<const DenseIndex*>& indexes,
                             const std::vector<std::string>& dev_query_keys,
                             const JudgmentSet& dev_judgments, const CorpusStore* corpus,
                             const std::vector<double>& grid_values, double rrf_k = 60.0);

}  // namespace hardneg
