#include "hardneg/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "hardneg/hashing.hpp"
#include "hardneg/rng.hpp"

namespace hardneg {
namespace {

constexpr std::uint32_t kCheckpointMagic = 0x484e4543;  // "HNEC"
constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t vocab_content_hash(const std::vector<std::string>& terms) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const std::string& t : terms) {
        h = fnv1a64(t, h);
        h = fnv1a64(std::string_view("\n", 1), h);
    }
    return h;
}

void check_finite(const std::vector<double>& v, const char* name) {
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(std::string("non-finite value in ") + name);
    }
}

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw IoError("unexpected end of checkpoint file");
    return value;
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& v, std::size_t n) {
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw IoError("unexpected end of checkpoint file");
}

}  // namespace

Vocab Vocab::from_terms(std::vector<std::string> terms) {
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    Vocab vocab;
    vocab.terms_.reserve(terms.size() + 2);
    vocab.terms_.push_back(kOovTerm);
    vocab.terms_.push_back(kSepTerm);
    for (std::string& t : terms) {
        if (t == kOovTerm || t == kSepTerm) continue;
        vocab.terms_.push_back(std::move(t));
    }
    for (std::size_t i = 0; i < vocab.terms_.size(); ++i) {
        vocab.index_.emplace(vocab.terms_[i], static_cast<int>(i));
    }
    vocab.hash_ = vocab_content_hash(vocab.terms_);
    return vocab;
}

Vocab Vocab::build(const CorpusStore& corpus,
                   const std::vector<const std::vector<TrainingPair>*>& pair_sets) {
    std::set<std::string> terms;
    for (const Passage& p : corpus.passages()) {
        for (auto& tok : tokenize(p.title).tokens) terms.insert(std::move(tok));
        for (auto& tok : tokenize(p.text).tokens) terms.insert(std::move(tok));
    }
    for (const auto* pairs : pair_sets) {
        if (!pairs) continue;
        for (const TrainingPair& pair : *pairs) {
            for (auto& tok : tokenize(pair.question).tokens) terms.insert(std::move(tok));
        }
    }
    return from_terms(std::vector<std::string>(terms.begin(), terms.end()));
}

int Vocab::index_of(const std::string& term) const {
    auto it = index_.find(term);
    return it == index_.end() ? oov_index() : it->second;
}

EncoderParams EncoderParams::init(Vocab vocab, int embed_dim, int hidden_dim, MaxLengths max_len,
                                  std::uint64_t seed) {
    if (embed_dim < 1 || hidden_dim < 1) throw Error("encoder dims must be >= 1");
    EncoderParams params;
    params.vocab = std::move(vocab);
    params.embed_dim = embed_dim;
    params.hidden_dim = hidden_dim;
    params.max_len = max_len;

    Rng rng(seed);
    const auto fill = [&rng](std::vector<double>& v, std::size_t n, double scale) {
        v.resize(n);
        for (double& x : v) x = scale * normal(rng);
    };
    const double h = static_cast<double>(hidden_dim);
    fill(params.token_embeddings, params.vocab.size() * static_cast<std::size_t>(hidden_dim), 0.5);
    fill(params.hidden_weight, static_cast<std::size_t>(hidden_dim) * hidden_dim, 1.0 / std::sqrt(h));
    params.hidden_bias.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    fill(params.proj_weight, static_cast<std::size_t>(embed_dim) * hidden_dim, 1.0 / std::sqrt(h));
    params.proj_bias.assign(static_cast<std::size_t>(embed_dim), 0.0);
    return params;
}

std::size_t EncoderParams::parameter_count() const {
    return token_embeddings.size() + hidden_weight.size() + hidden_bias.size() +
           proj_weight.size() + proj_bias.size();
}

EncoderGrads EncoderGrads::zeros_like(const EncoderParams& params) {
    EncoderGrads g;
    g.token_embeddings.assign(params.token_embeddings.size(), 0.0);
    g.hidden_weight.assign(params.hidden_weight.size(), 0.0);
    g.hidden_bias.assign(params.hidden_bias.size(), 0.0);
    g.proj_weight.assign(params.proj_weight.size(), 0.0);
    g.proj_bias.assign(params.proj_bias.size(), 0.0);
    return g;
}

void EncoderGrads::accumulate(const EncoderGrads& other) {
    const auto add = [](std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    add(token_embeddings, other.token_embeddings);
    add(hidden_weight, other.hidden_weight);
    add(hidden_bias, other.hidden_bias);
    add(proj_weight, other.proj_weight);
    add(proj_bias, other.proj_bias);
}

double EncoderGrads::max_abs() const {
    double m = 0.0;
    const auto scan = [&m](const std::vector<double>& v) {
        for (double x : v) m = std::max(m, std::abs(x));
    };
    scan(token_embeddings);
    scan(hidden_weight);
    scan(hidden_bias);
    scan(proj_weight);
    scan(proj_bias);
    return m;
}

std::vector<int> question_token_ids(const EncoderParams& params, const TokenStream& question) {
    std::vector<int> ids;
    const std::size_t limit = static_cast<std::size_t>(params.max_len.question);
    ids.reserve(std::min(question.size(), limit));
    for (const std::string& tok : question.tokens) {
        if (ids.size() >= limit) break;
        ids.push_back(params.vocab.index_of(tok));
    }
    return ids;
}

std::vector<int> passage_token_ids(const EncoderParams& params, const std::string& title,
                                   const std::string& text) {
    // Stream layout mirrors "title [SEP] text"; the separator is emitted even
    // when the title is empty.
    std::vector<int> ids;
    const std::size_t limit = static_cast<std::size_t>(params.max_len.passage);
    for (const std::string& tok : tokenize(title).tokens) {
        if (ids.size() >= limit) return ids;
        ids.push_back(params.vocab.index_of(tok));
    }
    if (ids.size() < limit) ids.push_back(Vocab::sep_index());
    for (const std::string& tok : tokenize(text).tokens) {
        if (ids.size() >= limit) break;
        ids.push_back(params.vocab.index_of(tok));
    }
    return ids;
}

ForwardCache encoder_forward(const EncoderParams& params, std::vector<int> token_ids) {
    if (token_ids.empty()) throw EmptyInput();
    const int H = params.hidden_dim;
    const int D = params.embed_dim;

    ForwardCache cache;
    cache.token_ids = std::move(token_ids);

    cache.mean.assign(static_cast<std::size_t>(H), 0.0);
    for (int id : cache.token_ids) {
        const double* row = params.token_embeddings.data() + static_cast<std::size_t>(id) * H;
        for (int h = 0; h < H; ++h) cache.mean[h] += row[h];
    }
    const double inv_t = 1.0 / static_cast<double>(cache.token_ids.size());
    for (int h = 0; h < H; ++h) cache.mean[h] *= inv_t;

    cache.hidden.assign(static_cast<std::size_t>(H), 0.0);
    for (int r = 0; r < H; ++r) {
        const double* w = params.hidden_weight.data() + static_cast<std::size_t>(r) * H;
        double z = params.hidden_bias[r];
        for (int c = 0; c < H; ++c) z += w[c] * cache.mean[c];
        cache.hidden[r] = std::tanh(z);
    }

    cache.pre_norm.assign(static_cast<std::size_t>(D), 0.0);
    for (int d = 0; d < D; ++d) {
        const double* w = params.proj_weight.data() + static_cast<std::size_t>(d) * H;
        double v = params.proj_bias[d];
        for (int h = 0; h < H; ++h) v += w[h] * cache.hidden[h];
        cache.pre_norm[d] = v;
    }

    double sq = 0.0;
    for (double v : cache.pre_norm) sq += v * v;
    cache.norm = std::sqrt(sq);
    if (!(cache.norm > 1e-12)) throw DegenerateEmbedding();

    cache.embedding.resize(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) cache.embedding[d] = cache.pre_norm[d] / cache.norm;
    cache.valid = true;
    return cache;
}

void encoder_backward(const EncoderParams& params, const ForwardCache& cache,
                      std::span<const double> upstream, EncoderGrads& grads) {
    const int H = params.hidden_dim;
    const int D = params.embed_dim;
    if (!cache.valid || cache.embedding.size() != static_cast<std::size_t>(D) ||
        cache.mean.size() != static_cast<std::size_t>(H)) {
        throw StaleActivation();
    }
    if (upstream.size() != static_cast<std::size_t>(D))
        throw DimMismatch(upstream.size(), static_cast<std::size_t>(D));

    // Through l2 normalization: d(v/|v|) = (g - (g.e) e) / |v|.
    double ge = 0.0;
    for (int d = 0; d < D; ++d) ge += upstream[d] * cache.embedding[d];
    std::vector<double> g_pre(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) g_pre[d] = (upstream[d] - ge * cache.embedding[d]) / cache.norm;

    // Projection layer.
    std::vector<double> g_hidden(static_cast<std::size_t>(H), 0.0);
    for (int d = 0; d < D; ++d) {
        grads.proj_bias[d] += g_pre[d];
        double* gw = grads.proj_weight.data() + static_cast<std::size_t>(d) * H;
        const double* w = params.proj_weight.data() + static_cast<std::size_t>(d) * H;
        for (int h = 0; h < H; ++h) {
            gw[h] += g_pre[d] * cache.hidden[h];
            g_hidden[h] += w[h] * g_pre[d];
        }
    }

    // Tanh hidden layer.
    std::vector<double> g_mean(static_cast<std::size_t>(H), 0.0);
    for (int r = 0; r < H; ++r) {
        const double gz = g_hidden[r] * (1.0 - cache.hidden[r] * cache.hidden[r]);
        grads.hidden_bias[r] += gz;
        double* gw = grads.hidden_weight.data() + static_cast<std::size_t>(r) * H;
        const double* w = params.hidden_weight.data() + static_cast<std::size_t>(r) * H;
        for (int c = 0; c < H; ++c) {
            gw[c] += gz * cache.mean[c];
            g_mean[c] += w[c] * gz;
        }
    }

    // Token mean.
    const double inv_t = 1.0 / static_cast<double>(cache.token_ids.size());
    for (int id : cache.token_ids) {
        double* ge_row = grads.token_embeddings.data() + static_cast<std::size_t>(id) * H;
        for (int h = 0; h < H; ++h) ge_row[h] += g_mean[h] * inv_t;
    }
}

Embedding encode_question(const EncoderParams& params, const TokenStream& question) {
    ForwardCache cache = encoder_forward(params, question_token_ids(params, question));
    return Embedding{std::move(cache.embedding), EmbeddingKind::question};
}

Embedding encode_passage(const EncoderParams& params, const std::string& title,
                         const std::string& text) {
    ForwardCache cache = encoder_forward(params, passage_token_ids(params, title, text));
    return Embedding{std::move(cache.embedding), EmbeddingKind::passage};
}

Embedding encode_tokens(const EncoderParams& params, const std::vector<std::string>& tokens,
                        EmbeddingKind kind) {
    const std::size_t limit = static_cast<std::size_t>(
        kind == EmbeddingKind::question ? params.max_len.question : params.max_len.passage);
    std::vector<int> ids;
    ids.reserve(std::min(tokens.size(), limit));
    for (const std::string& tok : tokens) {
        if (ids.size() >= limit) break;
        ids.push_back(params.vocab.index_of(tok));
    }
    ForwardCache cache = encoder_forward(params, std::move(ids));
    return Embedding{std::move(cache.embedding), kind};
}

double score(const Embedding& q, const Embedding& p) {
    if (q.dim() != p.dim()) throw DimMismatch(q.dim(), p.dim());
    double s = 0.0;
    for (std::size_t i = 0; i < q.values.size(); ++i) s += q.values[i] * p.values[i];
    return s;
}

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params) {
    check_finite(params.token_embeddings, "token_embeddings");
    check_finite(params.hidden_weight, "hidden_weight");
    check_finite(params.proj_weight, "proj_weight");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_pod(out, kCheckpointMagic);
    write_pod(out, kCheckpointVersion);
    write_pod(out, static_cast<std::uint32_t>(params.embed_dim));
    write_pod(out, static_cast<std::uint32_t>(params.hidden_dim));
    write_pod(out, static_cast<std::uint32_t>(params.max_len.question));
    write_pod(out, static_cast<std::uint32_t>(params.max_len.passage));
    write_pod(out, static_cast<std::uint64_t>(params.vocab.size()));
    write_pod(out, params.vocab.hash());
    for (const std::string& term : params.vocab.terms()) {
        write_pod(out, static_cast<std::uint32_t>(term.size()));
        out.write(term.data(), static_cast<std::streamsize>(term.size()));
    }
    write_doubles(out, params.token_embeddings);
    write_doubles(out, params.hidden_weight);
    write_doubles(out, params.hidden_bias);
    write_doubles(out, params.proj_weight);
    write_doubles(out, params.proj_bias);
    if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

EncoderParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    if (read_pod<std::uint32_t>(in) != kCheckpointMagic)
        throw CheckpointMismatch("bad magic in '" + path.string() + "'");
    if (read_pod<std::uint32_t>(in) != kCheckpointVersion)
        throw CheckpointMismatch("unsupported checkpoint version");

    EncoderParams params;
    params.embed_dim = static_cast<int>(read_pod<std::uint32_t>(in));
    params.hidden_dim = static_cast<int>(read_pod<std::uint32_t>(in));
    params.max_len.question = static_cast<int>(read_pod<std::uint32_t>(in));
    params.max_len.passage = static_cast<int>(read_pod<std::uint32_t>(in));
    const std::uint64_t vocab_size = read_pod<std::uint64_t>(in);
    const std::uint64_t stored_hash = read_pod<std::uint64_t>(in);

    std::vector<std::string> terms;
    terms.reserve(vocab_size);
    for (std::uint64_t i = 0; i < vocab_size; ++i) {
        const std::uint32_t len = read_pod<std::uint32_t>(in);
        std::string term(len, '\0');
        in.read(term.data(), static_cast<std::streamsize>(len));
        if (!in) throw IoError("unexpected end of checkpoint file");
        terms.push_back(std::move(term));
    }
    if (terms.size() < 2 || terms[0] != Vocab::kOovTerm || terms[1] != Vocab::kSepTerm)
        throw CheckpointMismatch("reserved vocabulary entries missing");
    if (vocab_content_hash(terms) != stored_hash)
        throw CheckpointMismatch("vocabulary hash does not match stored terms");
    params.vocab = Vocab::from_terms(std::vector<std::string>(terms.begin() + 2, terms.end()));
    if (params.vocab.hash() != stored_hash)
        throw CheckpointMismatch("vocabulary hash mismatch after reconstruction");

    const std::size_t V = params.vocab.size();
    const std::size_t H = static_cast<std::size_t>(params.hidden_dim);
    const std::size_t D = static_cast<std::size_t>(params.embed_dim);
    read_doubles(in, params.token_embeddings, V * H);
    read_doubles(in, params.hidden_weight, H * H);
    read_doubles(in, params.hidden_bias, H);
    read_doubles(in, params.proj_weight, D * H);
    read_doubles(in, params.proj_bias, D);
    return params;
}

}  // namespace hardneg
