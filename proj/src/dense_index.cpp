#include "hardneg/dense_index.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "hardneg/parallel.hpp"

namespace hardneg {
namespace {

constexpr std::uint32_t kDenseMagic = 0x48444e53;  // "HDNS"
constexpr std::uint32_t kDenseVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "embedding file format assumes a little-endian host");

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw IoError("unexpected end of embedding file");
    return value;
}

}  // namespace

std::vector<ScoredPassage> mips_topk(std::span<const double> matrix,
                                     const std::vector<std::string>& ids, int dim,
                                     std::span<const double> query, int k) {
    if (k < 1) throw Error("search requires k >= 1");
    if (query.size() != static_cast<std::size_t>(dim))
        throw DimMismatch(query.size(), static_cast<std::size_t>(dim));
    std::vector<ScoredPassage> hits;
    hits.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const double* row = matrix.data() + i * static_cast<std::size_t>(dim);
        double s = 0.0;
        for (int d = 0; d < dim; ++d) s += row[d] * query[d];
        hits.push_back(ScoredPassage{ids[i], s});
    }
    sort_hits(hits);
    truncate_hits(hits, static_cast<std::size_t>(k));
    return hits;
}

DenseIndex DenseIndex::build(const CorpusStore& corpus, const EncoderParams& params, int threads) {
    if (corpus.empty()) throw EmptyCorpus();
    DenseIndex index;
    index.dim_ = params.embed_dim;
    const std::size_t n = corpus.size();
    index.ids_.reserve(n);
    for (const Passage& p : corpus.passages()) index.ids_.push_back(p.passage_id);
    index.matrix_.assign(n * static_cast<std::size_t>(index.dim_), 0.0);

    std::vector<std::string> failures(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const Passage& p = corpus.passages()[i];
        try {
            const Embedding e = encode_passage(params, p.title, p.text);
            std::copy(e.values.begin(), e.values.end(),
                      index.matrix_.begin() + static_cast<std::ptrdiff_t>(i * index.dim_));
        } catch (const Error& err) {
            failures[i] = err.what();
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (!failures[i].empty())
            throw DegenerateEmbedding("passage '" + index.ids_[i] + "': " + failures[i]);
    }
    return index;
}

DenseIndex DenseIndex::from_rows(std::vector<std::string> ids, std::vector<double> matrix, int dim) {
    if (dim < 1) throw Error("dense index dim must be >= 1");
    if (matrix.size() != ids.size() * static_cast<std::size_t>(dim))
        throw DimMismatch(matrix.size(), ids.size() * static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        double sq = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double v = matrix[i * dim + d];
            sq += v * v;
        }
        if (std::abs(std::sqrt(sq) - 1.0) > 1e-6)
            throw Error("row for '" + ids[i] + "' is not unit norm");
    }
    DenseIndex index;
    index.ids_ = std::move(ids);
    index.matrix_ = std::move(matrix);
    index.dim_ = dim;
    return index;
}

std::vector<ScoredPassage> DenseIndex::search(const Embedding& query, int k) const {
    return mips_topk(matrix_, ids_, dim_, query.values, k);
}

std::vector<std::vector<ScoredPassage>> DenseIndex::search_batch(
    const std::vector<Embedding>& queries, int k, int threads) const {
    std::vector<std::vector<ScoredPassage>> out(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t i) { out[i] = search(queries[i], k); });
    return out;
}

std::span<const double> DenseIndex::row(std::size_t i) const {
    return {matrix_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
}

void DenseIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_pod(out, kDenseMagic);
    write_pod(out, kDenseVersion);
    write_pod(out, static_cast<std::uint64_t>(ids_.size()));
    write_pod(out, static_cast<std::uint32_t>(dim_));
    for (double v : matrix_) {
        const float f = static_cast<float>(v);
        write_pod(out, f);
    }
    for (const std::string& id : ids_) {
        write_pod(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
    if (!out) throw IoError("failed writing embedding file '" + path.string() + "'");
}

DenseIndex DenseIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    if (read_pod<std::uint32_t>(in) != kDenseMagic)
        throw Error("'" + path.string() + "' is not an embedding file");
    if (read_pod<std::uint32_t>(in) != kDenseVersion)
        throw Error("embedding file '" + path.string() + "' has unsupported version");
    const std::uint64_t n = read_pod<std::uint64_t>(in);
    const std::uint32_t dim = read_pod<std::uint32_t>(in);

    DenseIndex index;
    index.dim_ = static_cast<int>(dim);
    index.matrix_.resize(n * dim);
    for (double& v : index.matrix_) v = static_cast<double>(read_pod<float>(in));
    index.ids_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint32_t len = read_pod<std::uint32_t>(in);
        std::string id(len, '\0');
        in.read(id.data(), static_cast<std::streamsize>(len));
        if (!in) throw IoError("unexpected end of embedding file");
        index.ids_.push_back(std::move(id));
    }
    return index;
}

}  // namespace hardneg
