#pragma once

#include <string>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/encoder.hpp"
#include "hardneg/pools.hpp"
#include "hardneg/rng.hpp"
#include "hardneg/sparse_index.hpp"
#include "hardneg/trainer.hpp"

namespace hardneg {

class MissingAnswers : public Error {
public:
    explicit MissingAnswers(const std::string& question)
        : Error("pair '" + question + "' has no answer spans") {}
};

class NoDocumentStructure : public Error {
public:
    explicit NoDocumentStructure(const std::string& passage_id)
        : Error("passage '" + passage_id + "' has no document mapping; context negatives unavailable") {}
};

/// Retrieval dimension of the low-resolution (coarse) miner encoder.
inline constexpr int kCoarseMinerDim = 25;
/// Retrieval dimension of the high-resolution (fine) miner encoder.
inline constexpr int kFineMinerDim = 512;

struct MinerConfig {
    TrainConfig train;   // hard_neg_count is forced to 0
    int hidden_dim = 64;
};

struct MiningResult {
    PoolSet pools;
    /// Context halves synthesized for single-passage documents; these ids
    /// appear in pools but not in the retrieval corpus.
    std::vector<Passage> synthetic_passages;
    std::vector<std::string> warnings;
};

/// Trains an auxiliary dual encoder of the given dimension on the pairs with
/// in-batch random negatives only.
EncoderParams train_miner(const std::vector<TrainingPair>& pairs, const CorpusStore& corpus,
                          int embed_dim, const MinerConfig& config, int threads = 1);

/// Top-M nearest passages by dot product over the whole corpus, gold
/// excluded. Used by both the coarse and the fine strategies.
MiningResult mine_semantic(const std::vector<TrainingPair>& pairs, const CorpusStore& corpus, int M,
                           const EncoderParams& miner, Strategy strategy, int threads = 1);

/// Trains a fresh D=25 miner on the pairs, then mines with it.
MiningResult mine_coarse(const std::vector<TrainingPair>& pairs, const CorpusStore& corpus, int M,
                         const MinerConfig& config, int threads = 1);
/// Trains a fresh D=512 miner on the pairs, then mines with it.
MiningResult mine_fine(const std::vector<TrainingPair>& pairs, const CorpusStore& corpus, int M,
                       const MinerConfig& config, int threads = 1);

/// BM25 top results for the question text with the gold passage and every
/// passage containing an answer span removed; first M kept. Retrieval depth
/// before filtering is 2*M.
MiningResult mine_bm25(const std::vector<TrainingPair>& pairs, const InvertedIndex& index,
                       const CorpusStore& corpus, int M);

/// Other passages of the gold passage's document in document order, capped
/// at M. Single-passage documents fall back to splitting the gold passage in
/// half and taking the half without the answer span.
MiningResult mine_context(const std::vector<TrainingPair>& pairs, const CorpusStore& corpus, int M);

/// Union of the given pools per question, deduplicated keeping first-seen
/// provenance, downsampled uniformly to M when larger. The relative order of
/// surviving members is preserved; deterministic under the rng seed.
MiningResult mix_pools(const std::vector<const PoolSet*>& pools_by_strategy, int M, Rng& rng);

}  // namespace hardneg
