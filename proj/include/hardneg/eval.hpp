#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/error.hpp"
#include "hardneg/ranking.hpp"

namespace hardneg {

class MissingJudgment : public Error {
public:
    explicit MissingJudgment(const std::string& key)
        : Error("no judgment for ranked query '" + key + "'") {}
};

class InvalidGrade : public Error {
public:
    InvalidGrade(const std::string& key, int grade)
        : Error("negative relevance grade " + std::to_string(grade) + " for query '" + key + "'") {}
};

enum class JudgmentKind { spans, graded };

/// Ground truth for one query: answer spans for span-based tasks, or graded
/// passage relevances for qrels-based tasks.
struct Judgment {
    JudgmentKind kind = JudgmentKind::spans;
    std::vector<std::string> answer_spans;
    std::map<std::string, int> relevance;  // passage id -> grade >= 0

    static Judgment from_spans(std::vector<std::string> spans);
    static Judgment from_qrels(std::map<std::string, int> relevance);
};

using JudgmentSet = std::map<std::string, Judgment>;

struct MetricValue {
    double value = 0.0;
    int skipped_queries = 0;
};

enum class GainScheme { exponential, linear };

/// Fraction of queries whose top-k contains at least one passage with an
/// answer span, per k. Span judgments only; the corpus resolves passage text.
std::map<int, double> topk_accuracy(const std::vector<Ranking>& rankings,
                                    const JudgmentSet& judgments, const std::vector<int>& ks,
                                    const CorpusStore& corpus);

/// Mean reciprocal rank of the first relevant hit within top-k (0 when none).
/// Binary relevance: grade > 0 for graded judgments, span containment for
/// span judgments (which needs the corpus).
double mrr_at_k(const std::vector<Ranking>& rankings, const JudgmentSet& judgments, int k,
                const CorpusStore* corpus = nullptr);

/// Mean over queries of |relevant ∩ top-k| / |relevant|. Graded judgments
/// only; queries with no positive grade are skipped and counted.
MetricValue recall_at_k(const std::vector<Ranking>& rankings, const JudgmentSet& judgments, int k);

/// NDCG with gain (2^rel - 1)/log2(rank+1) by default (linear gain
/// available), normalized by the ideal DCG at k. Zero-ideal queries are
/// skipped and counted.
MetricValue ndcg_at_k(const std::vector<Ranking>& rankings, const JudgmentSet& judgments, int k,
                      GainScheme gain = GainScheme::exponential);

/// TREC run lines: "qid Q0 docid rank score tag".
void write_trec_run(const std::filesystem::path& path, const std::vector<Ranking>& rankings,
                    const std::string& tag);
std::vector<Ranking> read_trec_run(const std::filesystem::path& path);

/// TREC qrels lines: "qid 0 docid grade".
JudgmentSet read_qrels(const std::filesystem::path& path);

/// Metric rows as (name, k, value), emitted as CSV and JSON.
using MetricRows = std::vector<std::tuple<std::string, int, double>>;
void write_metrics_csv(const std::filesystem::path& path, const MetricRows& rows);
void write_metrics_json(const std::filesystem::path& path, const MetricRows& rows);
std::string format_metric(double value);

}  // namespace hardneg
