#include "hardneg/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

namespace hardneg {
namespace {

using nlohmann::json;

double coefficient_variance(const std::vector<double>& coeffs) {
    double mean = 0.0;
    for (double c : coeffs) mean += c;
    mean /= static_cast<double>(coeffs.size());
    double var = 0.0;
    for (double c : coeffs) var += (c - mean) * (c - mean);
    return var / static_cast<double>(coeffs.size());
}

}  // namespace

void FusionSpec::validate() const {
    if (members.empty()) throw SpecMismatch("no members");
    if (coefficients.size() != members.size())
        throw SpecMismatch("got " + std::to_string(coefficients.size()) + " coefficients for " +
                           std::to_string(members.size()) + " members");
    for (double c : coefficients) {
        if (!(c > 0.0)) throw SpecMismatch("coefficients must be > 0");
    }
    if (!(rrf_k > 0.0)) throw SpecMismatch("rrf_k must be > 0");
}

void FusionSpec::save(const std::filesystem::path& path) const {
    validate();
    json doc;
    doc["members"] = members;
    doc["coefficients"] = coefficients;
    doc["rrf_k"] = rrf_k;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << doc.dump(2) << '\n';
}

FusionSpec FusionSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error("fusion spec '" + path.string() + "' is not valid JSON");
    FusionSpec spec;
    spec.members = doc.at("members").get<std::vector<std::string>>();
    spec.coefficients = doc.at("coefficients").get<std::vector<double>>();
    spec.rrf_k = doc.value("rrf_k", 60.0);
    spec.validate();
    return spec;
}

std::vector<double> fuse_embedding(const std::vector<std::vector<double>>& member_vectors,
                                   const FusionSpec& spec) {
    spec.validate();
    if (member_vectors.size() != spec.members.size())
        throw SpecMismatch("got " + std::to_string(member_vectors.size()) + " vectors for " +
                           std::to_string(spec.members.size()) + " members");
    std::size_t total = 0;
    for (const auto& v : member_vectors) total += v.size();
    std::vector<double> fused;
    fused.reserve(total);
    for (std::size_t m = 0; m < member_vectors.size(); ++m) {
        const double alpha = spec.coefficients[m];
        for (double v : member_vectors[m]) fused.push_back(alpha * v);
    }
    return fused;
}

FusedIndex build_fused_index(const std::vector<const DenseIndex*>& members, const FusionSpec& spec) {
    spec.validate();
    if (members.size() != spec.members.size())
        throw SpecMismatch("got " + std::to_string(members.size()) + " indexes for " +
                           std::to_string(spec.members.size()) + " members");
    for (const DenseIndex* m : members) {
        if (!m) throw SpecMismatch("null member index");
        if (m->ids() != members.front()->ids())
            throw SpecMismatch("member indexes cover different passages");
    }

    FusedIndex fused;
    fused.ids = members.front()->ids();
    int dim = 0;
    for (const DenseIndex* m : members) dim += m->dim();
    fused.dim = dim;
    fused.matrix.assign(fused.ids.size() * static_cast<std::size_t>(dim), 0.0);
    for (std::size_t i = 0; i < fused.ids.size(); ++i) {
        double* out = fused.matrix.data() + i * static_cast<std::size_t>(dim);
        for (std::size_t m = 0; m < members.size(); ++m) {
            const auto row = members[m]->row(i);
            const double alpha = spec.coefficients[m];
            for (double v : row) *out++ = alpha * v;
        }
    }
    return fused;
}

std::vector<ScoredPassage> fused_search(const FusedIndex& index,
                                        const std::vector<double>& fused_query, int k) {
    return mips_topk(index.matrix, index.ids, index.dim, fused_query, k);
}

Ranking rrf_fusion(const std::vector<Ranking>& member_rankings, const FusionSpec& spec) {
    if (member_rankings.empty()) throw SpecMismatch("rrf_fusion needs at least one member ranking");
    if (!(spec.rrf_k > 0.0)) throw SpecMismatch("rrf_k must be > 0");

    Ranking fused;
    fused.query_key = member_rankings.front().query_key;
    std::map<std::string, double> scores;
    for (const Ranking& member : member_rankings) {
        for (std::size_t r = 0; r < member.hits.size(); ++r) {
            scores[member.hits[r].passage_id] += 1.0 / (spec.rrf_k + static_cast<double>(r + 1));
        }
    }
    fused.hits.reserve(scores.size());
    for (const auto& [id, s] : scores) fused.hits.push_back(ScoredPassage{id, s});
    sort_hits(fused.hits);
    return fused;
}

FusionSpec tune_coefficients(const std::vector<std::string>& members,
                             const std::vector<std::vector<Embedding>>& dev_queries_per_member,
                             const std::vector<const DenseIndex*>& indexes,
                             const std::vector<std::string>& dev_query_keys,
                             const JudgmentSet& dev_judgments, const CorpusStore* corpus,
                             const std::vector<double>& grid_values, double rrf_k) {
    if (grid_values.empty()) throw EmptyGrid();
    if (members.empty()) throw SpecMismatch("no members");
    if (dev_queries_per_member.size() != members.size() || indexes.size() != members.size())
        throw SpecMismatch("member count mismatch between queries and indexes");
    for (const auto& queries : dev_queries_per_member) {
        if (queries.size() != dev_query_keys.size())
            throw SpecMismatch("dev query count differs across members");
    }

    const bool span_task =
        !dev_judgments.empty() && dev_judgments.begin()->second.kind == JudgmentKind::spans;

    const std::size_t n_members = members.size();
    std::vector<std::size_t> cursor(n_members, 0);
    FusionSpec best;
    double best_score = -1.0;
    double best_variance = 0.0;

    while (true) {
        FusionSpec candidate;
        candidate.members = members;
        candidate.rrf_k = rrf_k;
        for (std::size_t m = 0; m < n_members; ++m) {
            candidate.coefficients.push_back(grid_values[cursor[m]]);
        }

        const FusedIndex fused = build_fused_index(indexes, candidate);
        std::vector<Ranking> rankings;
        rankings.reserve(dev_query_keys.size());
        for (std::size_t q = 0; q < dev_query_keys.size(); ++q) {
            std::vector<std::vector<double>> member_vecs;
            member_vecs.reserve(n_members);
            for (std::size_t m = 0; m < n_members; ++m) {
                member_vecs.push_back(dev_queries_per_member[m][q].values);
            }
            const std::vector<double> fused_query = fuse_embedding(member_vecs, candidate);
            rankings.push_back(Ranking{dev_query_keys[q], fused_search(fused, fused_query, 10)});
        }

        double metric;
        if (span_task) {
            if (!corpus) throw Error("span judgments require a corpus");
            metric = topk_accuracy(rankings, dev_judgments, {1}, *corpus).at(1);
        } else {
            metric = mrr_at_k(rankings, dev_judgments, 10);
        }

        const double variance = coefficient_variance(candidate.coefficients);
        const bool better =
            metric > best_score ||
            (metric == best_score && (variance < best_variance ||
                                      (variance == best_variance &&
                                       candidate.coefficients < best.coefficients)));
        if (better) {
            best_score = metric;
            best_variance = variance;
            best = candidate;
        }

        std::size_t m = 0;
        while (m < n_members && ++cursor[m] == grid_values.size()) {
            cursor[m] = 0;
            ++m;
        }
        if (m == n_members) break;
    }
    return best;
}

}  // namespace hardneg
