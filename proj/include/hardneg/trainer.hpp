#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/encoder.hpp"
#include "hardneg/error.hpp"
#include "hardneg/pools.hpp"
#include "hardneg/rng.hpp"

#include <json.hpp>

namespace hardneg {

class PoolTooSmall : public Error {
public:
    PoolTooSmall(const std::string& key, std::size_t have, int need)
        : Error("negative pool for question " + key + " has " + std::to_string(have) +
                " members, need " + std::to_string(need)) {}
};

class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(std::size_t i, std::size_t j)
        : Error("non-finite score at question " + std::to_string(i) + ", candidate " +
                std::to_string(j)) {}
};

struct TrainConfig {
    int batch_size = 32;        // B
    int hard_neg_count = 2;     // N, sampled per question per iteration
    int pool_size = 100;        // M
    double learning_rate = 1e-3;
    int epochs = 40;
    std::uint64_t seed = 17;
    double loss_scale = 20.0;   // multiplier on dot products inside the softmax
    int patience = 3;
    bool early_stopping = true;
    std::string early_stop_metric = "recall_at_1";

    void validate() const;
    /// "key = value" lines; '#' starts a comment. Keys are exactly the field
    /// names above; unknown keys are rejected.
    static TrainConfig from_kv_file(const std::filesystem::path& path);
    static TrainConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct BatchPassage {
    std::string passage_id;
    std::string title;
    std::string text;
};

/// One training batch: questions[i] pairs with gold_passages[i]; each
/// question carries N sampled hard negatives, none equal to its gold.
struct TrainingBatch {
    std::vector<TokenStream> questions;
    std::vector<BatchPassage> gold_passages;
    std::vector<std::vector<BatchPassage>> hard_negatives;  // B x N, N may be 0

    std::size_t size() const { return questions.size(); }
    int negatives_per_question() const {
        return hard_negatives.empty() ? 0 : static_cast<int>(hard_negatives.front().size());
    }
};

struct LossReport {
    double forward_loss = 0.0;   // L_f
    double backward_loss = 0.0;  // L_b
    double total = 0.0;          // exactly 0.5 * (L_f + L_b)
    std::vector<double> per_example_forward;
    int forward_candidates_per_question = 0;  // (N+1) * B
    int backward_candidates_per_question = 0; // B
};

/// Bidirectional softmax ranking loss straight from score matrices.
/// forward_scores is B x C with question i's gold at column i (C >= B);
/// backward_scores is B x B with passage i's own question at column i.
LossReport bidirectional_loss_from_scores(const std::vector<std::vector<double>>& forward_scores,
                                          const std::vector<std::vector<double>>& backward_scores);

struct ScoreGrads {
    std::vector<std::vector<double>> forward;   // dL/d forward_scores
    std::vector<std::vector<double>> backward;  // dL/d backward_scores
};
ScoreGrads bidirectional_loss_grads_from_scores(
    const std::vector<std::vector<double>>& forward_scores,
    const std::vector<std::vector<double>>& backward_scores);

/// Scores every question against (N+1)*B candidates in the forward
/// direction (gold of each question plus every sampled hard negative) and
/// against the B in-batch questions backward; hard negatives are excluded
/// from the backward direction.
LossReport forward_loss(const EncoderParams& params, const TrainingBatch& batch,
                        const TrainConfig& config);

struct BatchGradients {
    LossReport report;
    EncoderGrads grads;
};
BatchGradients loss_and_gradients(const EncoderParams& params, const TrainingBatch& batch,
                                  const TrainConfig& config);

/// Looks up passages in the retrieval corpus first, then in the side table
/// of mined synthetic passages (context halves).
class PassageResolver {
public:
    PassageResolver(const CorpusStore& primary, const CorpusStore* extra = nullptr)
        : primary_(&primary), extra_(extra) {}
    const Passage& resolve(const std::string& passage_id) const;

private:
    const CorpusStore* primary_;
    const CorpusStore* extra_;
};

/// Samples config.hard_neg_count negatives per question uniformly without
/// replacement from that question's pool, freshly on every call.
TrainingBatch build_batch(std::span<const TrainingPair> pairs, const PoolSet& pools,
                          const TrainConfig& config, const PassageResolver& resolver, Rng& rng);

/// Adam-style moment estimates (beta 0.9/0.999, eps 1e-8).
class AdamOptimizer {
public:
    explicit AdamOptimizer(const EncoderParams& params);
    void step(EncoderParams& params, const EncoderGrads& grads, double learning_rate);
    void reset();

private:
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    long t_ = 0;
};

struct EpochStats {
    int epoch = 0;  // 1-based within its stage
    double forward_loss = 0.0;
    double backward_loss = 0.0;
    double total = 0.0;
    std::optional<double> dev_recall_at_1;
};

struct TrainHistory {
    std::vector<EpochStats> stage1;
    std::vector<EpochStats> stage2;

    /// CSV columns: stage,epoch,L_f,L_b,L,dev_recall@1 (last empty when no
    /// dev evaluation ran).
    std::string to_csv() const;
};

struct TrainTask {
    const std::vector<TrainingPair>* stage1_pairs = nullptr;
    const PoolSet* stage1_pools = nullptr;
    TrainConfig stage1_config;

    const std::vector<TrainingPair>* stage2_pairs = nullptr;
    const PoolSet* stage2_pools = nullptr;
    TrainConfig stage2_config;

    const std::vector<TrainingPair>* dev_pairs = nullptr;
    const CorpusStore* corpus = nullptr;          // retrieval corpus for dev eval
    const CorpusStore* extra_passages = nullptr;  // synthetic context halves
    int threads = 1;
};

/// Two-stage loop: Stage 1 on synthetic pairs, Stage 2 on gold pairs, dev
/// recall@1 after each epoch, early stopping on the configured patience
/// (best-dev parameters are restored). Optimizer state is reset between
/// stages.
TrainHistory train(EncoderParams& params, const TrainTask& task);

/// Fraction of dev questions whose top-1 retrieved passage is the gold one.
double dev_recall_at_1(const EncoderParams& params, const CorpusStore& corpus,
                       const std::vector<TrainingPair>& dev_pairs, int threads = 1);

}  // namespace hardneg
