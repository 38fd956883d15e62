#include "hardneg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hardneg/text.hpp"

namespace hardneg {
namespace {

const Judgment& judgment_for(const JudgmentSet& judgments, const std::string& key) {
    auto it = judgments.find(key);
    if (it == judgments.end()) throw MissingJudgment(key);
    return it->second;
}

bool hit_is_relevant(const Judgment& j, const std::string& passage_id, const CorpusStore* corpus) {
    if (j.kind == JudgmentKind::graded) {
        auto it = j.relevance.find(passage_id);
        return it != j.relevance.end() && it->second > 0;
    }
    if (!corpus) throw Error("span judgments require a corpus for relevance checks");
    const Passage* p = corpus->find(passage_id);
    return p && contains_answer_span(*p, j.answer_spans);
}

void require_k(int k) {
    if (k < 1) throw Error("metric cutoff k must be >= 1");
}

double gain_of(int grade, GainScheme scheme) {
    if (scheme == GainScheme::linear) return static_cast<double>(grade);
    return std::pow(2.0, static_cast<double>(grade)) - 1.0;
}

}  // namespace

Judgment Judgment::from_spans(std::vector<std::string> spans) {
    Judgment j;
    j.kind = JudgmentKind::spans;
    j.answer_spans = std::move(spans);
    return j;
}

Judgment Judgment::from_qrels(std::map<std::string, int> relevance) {
    Judgment j;
    j.kind = JudgmentKind::graded;
    j.relevance = std::move(relevance);
    return j;
}

std::map<int, double> topk_accuracy(const std::vector<Ranking>& rankings,
                                    const JudgmentSet& judgments, const std::vector<int>& ks,
                                    const CorpusStore& corpus) {
    for (int k : ks) require_k(k);
    std::map<int, int> hits_at;
    for (int k : ks) hits_at[k] = 0;

    for (const Ranking& ranking : rankings) {
        const Judgment& j = judgment_for(judgments, ranking.query_key);
        if (j.kind != JudgmentKind::spans)
            throw Error("topk_accuracy requires span judgments");
        // first rank (1-based) containing an answer span, if any
        std::size_t first_hit = 0;
        for (std::size_t r = 0; r < ranking.hits.size(); ++r) {
            if (hit_is_relevant(j, ranking.hits[r].passage_id, &corpus)) {
                first_hit = r + 1;
                break;
            }
        }
        if (first_hit == 0) continue;
        for (int k : ks) {
            if (first_hit <= static_cast<std::size_t>(k)) ++hits_at[k];
        }
    }

    std::map<int, double> out;
    const double n = rankings.empty() ? 1.0 : static_cast<double>(rankings.size());
    for (int k : ks) out[k] = static_cast<double>(hits_at[k]) / n;
    return out;
}

double mrr_at_k(const std::vector<Ranking>& rankings, const JudgmentSet& judgments, int k,
                const CorpusStore* corpus) {
    require_k(k);
    if (rankings.empty()) return 0.0;
    double total = 0.0;
    for (const Ranking& ranking : rankings) {
        const Judgment& j = judgment_for(judgments, ranking.query_key);
        const std::size_t depth = std::min<std::size_t>(ranking.hits.size(), static_cast<std::size_t>(k));
        for (std::size_t r = 0; r < depth; ++r) {
            if (hit_is_relevant(j, ranking.hits[r].passage_id, corpus)) {
                total += 1.0 / static_cast<double>(r + 1);
                break;
            }
        }
    }
    return total / static_cast<double>(rankings.size());
}

MetricValue recall_at_k(const std::vector<Ranking>& rankings, const JudgmentSet& judgments, int k) {
    require_k(k);
    MetricValue result;
    double total = 0.0;
    int counted = 0;
    for (const Ranking& ranking : rankings) {
        const Judgment& j = judgment_for(judgments, ranking.query_key);
        if (j.kind != JudgmentKind::graded)
            throw Error("recall_at_k requires graded judgments (positives must be enumerable)");
        int positives = 0;
        for (const auto& [id, grade] : j.relevance) {
            if (grade < 0) throw InvalidGrade(ranking.query_key, grade);
            if (grade > 0) ++positives;
        }
        if (positives == 0) {
            ++result.skipped_queries;
            continue;
        }
        int found = 0;
        const std::size_t depth = std::min<std::size_t>(ranking.hits.size(), static_cast<std::size_t>(k));
        for (std::size_t r = 0; r < depth; ++r) {
            auto it = j.relevance.find(ranking.hits[r].passage_id);
            if (it != j.relevance.end() && it->second > 0) ++found;
        }
        total += static_cast<double>(found) / static_cast<double>(positives);
        ++counted;
    }
    result.value = counted == 0 ? 0.0 : total / static_cast<double>(counted);
    return result;
}

MetricValue ndcg_at_k(const std::vector<Ranking>& rankings, const JudgmentSet& judgments, int k,
                      GainScheme gain) {
    require_k(k);
    MetricValue result;
    double total = 0.0;
    int counted = 0;
    for (const Ranking& ranking : rankings) {
        const Judgment& j = judgment_for(judgments, ranking.query_key);
        if (j.kind != JudgmentKind::graded) throw Error("ndcg_at_k requires graded judgments");
        std::vector<int> grades;
        grades.reserve(j.relevance.size());
        for (const auto& [id, grade] : j.relevance) {
            if (grade < 0) throw InvalidGrade(ranking.query_key, grade);
            grades.push_back(grade);
        }
        std::sort(grades.begin(), grades.end(), std::greater<>());

        double ideal = 0.0;
        for (std::size_t r = 0; r < grades.size() && r < static_cast<std::size_t>(k); ++r) {
            ideal += gain_of(grades[r], gain) / std::log2(static_cast<double>(r + 2));
        }
        if (ideal <= 0.0) {
            ++result.skipped_queries;
            continue;
        }
        double dcg = 0.0;
        const std::size_t depth = std::min<std::size_t>(ranking.hits.size(), static_cast<std::size_t>(k));
        for (std::size_t r = 0; r < depth; ++r) {
            auto it = j.relevance.find(ranking.hits[r].passage_id);
            if (it == j.relevance.end()) continue;
            dcg += gain_of(it->second, gain) / std::log2(static_cast<double>(r + 2));
        }
        total += dcg / ideal;
        ++counted;
    }
    result.value = counted == 0 ? 0.0 : total / static_cast<double>(counted);
    return result;
}

std::string format_metric(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

void write_trec_run(const std::filesystem::path& path, const std::vector<Ranking>& rankings,
                    const std::string& tag) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const Ranking& ranking : rankings) {
        for (std::size_t r = 0; r < ranking.hits.size(); ++r) {
            out << ranking.query_key << " Q0 " << ranking.hits[r].passage_id << ' ' << (r + 1) << ' '
                << format_metric(ranking.hits[r].score) << ' ' << tag << '\n';
        }
    }
}

std::vector<Ranking> read_trec_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<Ranking> rankings;
    std::map<std::string, std::size_t> slot;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, q0, docid, tag;
        std::size_t rank = 0;
        double s = 0.0;
        if (!(ss >> qid >> q0 >> docid >> rank >> s >> tag) || rank < 1)
            throw ParseError(path, line_no, "malformed TREC run line");
        auto [it, inserted] = slot.emplace(qid, rankings.size());
        if (inserted) rankings.push_back(Ranking{qid, {}});
        auto& hits = rankings[it->second].hits;
        if (hits.size() < rank) hits.resize(rank);
        hits[rank - 1] = ScoredPassage{docid, s};
    }
    return rankings;
}

JudgmentSet read_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    JudgmentSet judgments;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, zero, docid;
        int grade = 0;
        if (!(ss >> qid >> zero >> docid >> grade))
            throw ParseError(path, line_no, "malformed qrels line");
        auto [it, inserted] = judgments.emplace(qid, Judgment::from_qrels({}));
        it->second.relevance[docid] = grade;
    }
    return judgments;
}

void write_metrics_csv(const std::filesystem::path& path, const MetricRows& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "metric,k,value\n";
    for (const auto& [name, k, value] : rows) {
        out << name << ',' << k << ',' << format_metric(value) << '\n';
    }
}

void write_metrics_json(const std::filesystem::path& path, const MetricRows& rows) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& [name, k, value] : rows) {
        doc.push_back({{"metric", name}, {"k", k}, {"value", value}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << doc.dump(2) << '\n';
}

}  // namespace hardneg
