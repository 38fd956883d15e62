#include "hardneg/sparse_index.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace hardneg {
namespace {

using nlohmann::json;

constexpr int kIndexFormatVersion = 1;

}  // namespace

InvertedIndex InvertedIndex::build(const CorpusStore& corpus, Bm25Params params) {
    if (corpus.empty()) throw EmptyCorpus();
    if (params.k1 < 0.0 || params.b < 0.0 || params.b > 1.0)
        throw Error("invalid BM25 params: require k1 >= 0 and 0 <= b <= 1");

    InvertedIndex index;
    index.params_ = params;
    index.doc_ids_.reserve(corpus.size());
    index.doc_lengths_.reserve(corpus.size());

    std::uint64_t total_len = 0;
    for (const Passage& p : corpus.passages()) {
        const std::uint32_t ord = static_cast<std::uint32_t>(index.doc_ids_.size());
        index.ordinal_.emplace(p.passage_id, ord);
        index.doc_ids_.push_back(p.passage_id);

        const TokenStream stream = tokenize(p.text);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(stream.size()));
        total_len += stream.size();

        std::map<std::string, std::uint32_t> tf;
        for (const std::string& tok : stream.tokens) ++tf[tok];
        for (const auto& [term, count] : tf) {
            index.postings_[term].push_back(Posting{ord, count});
        }
    }
    index.avg_doc_length_ = static_cast<double>(total_len) / static_cast<double>(corpus.size());
    return index;
}

double InvertedIndex::idf(std::size_t df) const {
    const double n = static_cast<double>(doc_ids_.size());
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double InvertedIndex::term_doc_score(std::uint32_t tf, std::uint32_t doc_len, double idf_value) const {
    const double f = static_cast<double>(tf);
    const double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_len) / avg_doc_length_;
    return idf_value * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

double InvertedIndex::score(const TokenStream& query, const std::string& passage_id) const {
    auto ord_it = ordinal_.find(passage_id);
    if (ord_it == ordinal_.end()) throw NotIndexed(passage_id);
    const std::uint32_t ord = ord_it->second;

    double total = 0.0;
    for (const std::string& term : query.tokens) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const auto& plist = it->second;
        auto hit = std::lower_bound(plist.begin(), plist.end(), ord,
                                    [](const Posting& p, std::uint32_t o) { return p.doc < o; });
        if (hit == plist.end() || hit->doc != ord) continue;
        total += term_doc_score(hit->tf, doc_lengths_[ord], idf(plist.size()));
    }
    return total;
}

std::vector<ScoredPassage> InvertedIndex::topk(const TokenStream& query, int k) const {
    if (k < 1) throw Error("topk requires k >= 1");
    std::unordered_map<std::uint32_t, double> acc;
    for (const std::string& term : query.tokens) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double idf_value = idf(it->second.size());
        for (const Posting& p : it->second) {
            acc[p.doc] += term_doc_score(p.tf, doc_lengths_[p.doc], idf_value);
        }
    }
    // Repeated query terms contribute once per occurrence, matching score().
    std::vector<ScoredPassage> hits;
    hits.reserve(acc.size());
    for (const auto& [ord, s] : acc) {
        if (s > 0.0) hits.push_back(ScoredPassage{doc_ids_[ord], s});
    }
    sort_hits(hits);
    truncate_hits(hits, static_cast<std::size_t>(k));
    return hits;
}

std::size_t InvertedIndex::doc_length(const std::string& passage_id) const {
    auto it = ordinal_.find(passage_id);
    if (it == ordinal_.end()) throw NotIndexed(passage_id);
    return doc_lengths_[it->second];
}

std::vector<std::pair<std::string, std::uint32_t>> InvertedIndex::postings(const std::string& term) const {
    std::vector<std::pair<std::string, std::uint32_t>> out;
    auto it = postings_.find(term);
    if (it == postings_.end()) return out;
    out.reserve(it->second.size());
    for (const Posting& p : it->second) out.emplace_back(doc_ids_[p.doc], p.tf);
    return out;
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    json doc;
    doc["format_version"] = kIndexFormatVersion;
    doc["k1"] = params_.k1;
    doc["b"] = params_.b;
    doc["avg_doc_length"] = avg_doc_length_;
    doc["doc_ids"] = doc_ids_;
    doc["doc_lengths"] = doc_lengths_;
    json postings = json::object();
    for (const auto& [term, plist] : postings_) {
        json rows = json::array();
        for (const Posting& p : plist) rows.push_back({p.doc, p.tf});
        postings[term] = std::move(rows);
    }
    doc["postings"] = std::move(postings);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << doc.dump() << '\n';
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error("sparse index '" + path.string() + "' is not valid JSON");
    if (doc.value("format_version", -1) != kIndexFormatVersion)
        throw Error("sparse index '" + path.string() + "' has unsupported format version");

    InvertedIndex index;
    index.params_.k1 = doc.at("k1").get<double>();
    index.params_.b = doc.at("b").get<double>();
    index.avg_doc_length_ = doc.at("avg_doc_length").get<double>();
    index.doc_ids_ = doc.at("doc_ids").get<std::vector<std::string>>();
    index.doc_lengths_ = doc.at("doc_lengths").get<std::vector<std::uint32_t>>();
    for (std::size_t i = 0; i < index.doc_ids_.size(); ++i) {
        index.ordinal_.emplace(index.doc_ids_[i], static_cast<std::uint32_t>(i));
    }
    for (const auto& [term, rows] : doc.at("postings").items()) {
        auto& plist = index.postings_[term];
        plist.reserve(rows.size());
        for (const auto& row : rows) {
            plist.push_back(Posting{row.at(0).get<std::uint32_t>(), row.at(1).get<std::uint32_t>()});
        }
    }
    return index;
}

}  // namespace hardneg
