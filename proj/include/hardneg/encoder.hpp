#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/error.hpp"
#include "hardneg/text.hpp"

namespace hardneg {

class EmptyInput : public Error {
public:
    EmptyInput() : Error("encoder input is empty after tokenization and truncation") {}
};

class DegenerateEmbedding : public Error {
public:
    explicit DegenerateEmbedding(const std::string& context = {})
        : Error("pre-normalization output has zero norm" + (context.empty() ? "" : " (" + context + ")")) {}
};

class DimMismatch : public Error {
public:
    DimMismatch(std::size_t a, std::size_t b)
        : Error("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class StaleActivation : public Error {
public:
    StaleActivation() : Error("backward called without a valid forward activation cache") {}
};

class CheckpointMismatch : public Error {
public:
    explicit CheckpointMismatch(const std::string& why) : Error("checkpoint rejected: " + why) {}
};

/// Term -> embedding-row mapping with two reserved entries: an OOV bucket at
/// index 0 and the title/text separator token at index 1. Ordinary terms are
/// stored in sorted order so the table (and its hash) is deterministic.
class Vocab {
public:
    static constexpr const char* kOovTerm = "<oov>";
    static constexpr const char* kSepTerm = "<sep>";

    Vocab() = default;
    /// Builds from unique terms (reserved entries added automatically).
    static Vocab from_terms(std::vector<std::string> terms);
    /// Collects terms from every passage (title + text) and question.
    static Vocab build(const CorpusStore& corpus,
                       const std::vector<const std::vector<TrainingPair>*>& pair_sets);

    int index_of(const std::string& term) const;  // OOV index when unknown
    static constexpr int oov_index() { return 0; }
    static constexpr int sep_index() { return 1; }
    std::size_t size() const { return terms_.size(); }
    const std::vector<std::string>& terms() const { return terms_; }
    std::uint64_t hash() const { return hash_; }

private:
    std::vector<std::string> terms_;
    std::unordered_map<std::string, int> index_;
    std::uint64_t hash_ = 0;
};

struct MaxLengths {
    int question = 64;
    int passage = 384;
};

enum class EmbeddingKind { question, passage };

/// l2-normalized encoder output.
struct Embedding {
    std::vector<double> values;
    EmbeddingKind kind = EmbeddingKind::question;

    std::size_t dim() const { return values.size(); }
};

/// All trainable weights of the shared dual encoder. The forward pipeline is
/// mean of token embeddings -> tanh hidden layer -> linear projection ->
/// l2 normalization; both towers use this one parameter set.
struct EncoderParams {
    Vocab vocab;
    int hidden_dim = 64;
    int embed_dim = 128;
    MaxLengths max_len;

    std::vector<double> token_embeddings;  // vocab.size() x hidden_dim, row-major
    std::vector<double> hidden_weight;     // hidden_dim x hidden_dim, row-major
    std::vector<double> hidden_bias;       // hidden_dim
    std::vector<double> proj_weight;       // embed_dim x hidden_dim, row-major
    std::vector<double> proj_bias;         // embed_dim

    static EncoderParams init(Vocab vocab, int embed_dim, int hidden_dim, MaxLengths max_len,
                              std::uint64_t seed);
    std::size_t parameter_count() const;
};

/// Per-input activations kept for the exact backward pass.
struct ForwardCache {
    std::vector<int> token_ids;
    std::vector<double> mean;       // hidden_dim
    std::vector<double> hidden;     // hidden_dim, post-tanh
    std::vector<double> pre_norm;   // embed_dim, before l2 normalization
    double norm = 0.0;
    std::vector<double> embedding;  // embed_dim, unit norm
    bool valid = false;
};

/// Gradient tensors, same shapes as EncoderParams.
struct EncoderGrads {
    std::vector<double> token_embeddings;
    std::vector<double> hidden_weight;
    std::vector<double> hidden_bias;
    std::vector<double> proj_weight;
    std::vector<double> proj_bias;

    static EncoderGrads zeros_like(const EncoderParams& params);
    void accumulate(const EncoderGrads& other);
    double max_abs() const;
};

std::vector<int> question_token_ids(const EncoderParams& params, const TokenStream& question);
std::vector<int> passage_token_ids(const EncoderParams& params, const std::string& title,
                                   const std::string& text);

ForwardCache encoder_forward(const EncoderParams& params, std::vector<int> token_ids);
void encoder_backward(const EncoderParams& params, const ForwardCache& cache,
                      std::span<const double> upstream, EncoderGrads& grads);

Embedding encode_question(const EncoderParams& params, const TokenStream& question);
Embedding encode_passage(const EncoderParams& params, const std::string& title,
                         const std::string& text);
/// Shared-tower entry point: both kinds run the identical pipeline over the
/// given tokens (truncated to the kind's max length).
Embedding encode_tokens(const EncoderParams& params, const std::vector<std::string>& tokens,
                        EmbeddingKind kind);

/// Dot product of two embeddings; in [-1, 1] for unit inputs.
double score(const Embedding& q, const Embedding& p);

/// Binary checkpoint with dims, vocab, vocab hash, and a format version.
/// Loading refuses files whose stored vocab does not match the stored hash.
void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params);
EncoderParams load_checkpoint(const std::filesystem::path& path);

}  // namespace hardneg
