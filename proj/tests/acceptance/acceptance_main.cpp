// Acceptance suite: runs every acceptance criterion end to end and prints
// one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "hardneg/dense_index.hpp"
#include "hardneg/ensemble.hpp"
#include "hardneg/eval.hpp"
#include "hardneg/mining.hpp"
#include "hardneg/pipeline.hpp"
#include "hardneg/sparse_index.hpp"
#include "hardneg/taskgen.hpp"
#include "hardneg/trainer.hpp"

#include "../support/grad_check.hpp"

namespace fs = std::filesystem;
using namespace hardneg;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;
fs::path g_workdir;

class CheckFailure : public std::runtime_error {
public:
    explicit CheckFailure(const std::string& msg) : std::runtime_error(msg) {}
};

void require(bool ok, const std::string& what) {
    if (!ok) throw CheckFailure(what);
}

void criterion(int number, const std::string& name, const std::function<void()>& body) {
    const auto start = Clock::now();
    std::string failure;
    try {
        body();
    } catch (const std::exception& e) {
        failure = e.what();
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    char line[512];
    if (failure.empty()) {
        std::snprintf(line, sizeof(line), "[PASS] criterion %d: %s (%.1fs)", number, name.c_str(),
                      seconds);
    } else {
        std::snprintf(line, sizeof(line), "[FAIL] criterion %d: %s (%.1fs): %s", number,
                      name.c_str(), seconds, failure.c_str());
        ++g_failures;
    }
    std::cout << line << std::endl;
}

// ---------------------------------------------------------------------------
// shared builders

TrainingBatch identical_batch(int B) {
    TrainingBatch batch;
    for (int i = 0; i < B; ++i) {
        batch.questions.push_back(tokenize("red sun rising"));
        batch.gold_passages.push_back(BatchPassage{"g", "", "the red sun rises over the field"});
        batch.hard_negatives.emplace_back();
    }
    return batch;
}

TrainingBatch varied_batch(int B, int N) {
    static const char* questions[] = {"red sun rising", "blue sea calm", "green rock field",
                                      "moon over sky", "sea and rock", "sky turns red",
                                      "sun on the sea", "blue moon night"};
    static const char* texts[] = {"the red sun rises over the field", "the blue sea is calm today",
                                  "green rock formations in the field", "the moon hangs over the sky",
                                  "sea spray hits the rock", "the sky turns red at dusk",
                                  "sunlight glitters on the sea", "a blue moon appears at night"};
    TrainingBatch batch;
    for (int i = 0; i < B; ++i) {
        batch.questions.push_back(tokenize(questions[i % 8]));
        batch.gold_passages.push_back(BatchPassage{"g" + std::to_string(i), "", texts[i % 8]});
        std::vector<BatchPassage> negs;
        for (int r = 0; r < N; ++r) {
            negs.push_back(BatchPassage{"n" + std::to_string(i) + "_" + std::to_string(r), "",
                                        texts[(i + r + 3) % 8]});
        }
        batch.hard_negatives.push_back(std::move(negs));
    }
    return batch;
}

EncoderParams tiny_encoder(std::uint64_t seed, int embed_dim = 4, int hidden_dim = 3) {
    Vocab vocab = Vocab::from_terms({"red", "sun", "rising", "blue", "sea", "calm", "green", "rock",
                                     "field", "moon", "over", "sky", "and", "turns", "on", "the",
                                     "night", "rises", "is", "today", "formations", "in", "hangs",
                                     "spray", "hits", "at", "dusk", "sunlight", "glitters", "a",
                                     "appears"});
    return EncoderParams::init(std::move(vocab), embed_dim, hidden_dim, MaxLengths{}, seed);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot read " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::vector<double> random_unit(int dim, Rng& rng) {
    std::vector<double> v(dim);
    double sq = 0.0;
    for (double& x : v) {
        x = normal(rng);
        sq += x * x;
    }
    for (double& x : v) x /= std::sqrt(sq);
    return v;
}

// ---------------------------------------------------------------------------
// criterion bodies

void check_loss_identities() {
    const EncoderParams params = tiny_encoder(1);
    TrainConfig cfg;

    // B=1, N=0: the single candidate is the gold, so both losses vanish
    for (double scale : {1.0, 5.0, 20.0}) {
        cfg.loss_scale = scale;
        const LossReport r = forward_loss(params, varied_batch(1, 0), cfg);
        require(r.forward_loss == 0.0 && r.backward_loss == 0.0 && r.total == 0.0,
                "B=1 N=0 loss must be exactly zero");
    }

    // identical pairs: every pairwise score equal, softmax uniform over 4
    cfg.loss_scale = 20.0;
    const LossReport uniform = forward_loss(params, identical_batch(4), cfg);
    require(std::abs(uniform.forward_loss - std::log(4.0)) < 1e-9, "uniform L_f != ln 4");
    require(std::abs(uniform.backward_loss - std::log(4.0)) < 1e-9, "uniform L_b != ln 4");

    // L = 0.5 (L_f + L_b) holds bitwise on assorted batches
    for (auto [B, N] : {std::pair{2, 0}, std::pair{3, 2}, std::pair{4, 1}}) {
        const LossReport r = forward_loss(params, varied_batch(B, N), cfg);
        require(r.total == 0.5 * (r.forward_loss + r.backward_loss), "L != 0.5 (L_f + L_b)");
    }
}

void check_gradients() {
    TrainConfig cfg;
    cfg.loss_scale = 2.0;
    for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
        const EncoderParams params = tiny_encoder(seed);
        require(params.parameter_count() <= 500, "model exceeds 500 parameters");
        const auto result =
            hardneg::testing::finite_difference_check(params, varied_batch(3, 1), cfg, 1e-4);
        char buf[128];
        std::snprintf(buf, sizeof(buf), "seed %llu: max rel err %.3g >= 1e-4",
                      static_cast<unsigned long long>(seed), result.max_rel_err);
        require(result.max_rel_err < 1e-4, buf);
    }
}

void check_batch_contract() {
    const EncoderParams params = tiny_encoder(2);
    TrainConfig cfg;
    for (auto [B, N] : {std::pair{2, 0}, std::pair{4, 2}, std::pair{8, 3}}) {
        const LossReport r = forward_loss(params, varied_batch(B, N), cfg);
        require(r.forward_candidates_per_question == (N + 1) * B,
                "forward candidates != (N+1)*B for B=" + std::to_string(B));
        require(r.backward_candidates_per_question == B,
                "backward candidates != B for B=" + std::to_string(B));
    }
}

void check_oracle_equivalence() {
    // shared toy task, well under 1000 passages
    TaskGenConfig taskcfg;
    taskcfg.n_docs = 80;  // 400 passages
    taskcfg.n_gold_pairs = 60;
    taskcfg.n_dev_pairs = 10;
    taskcfg.n_test_pairs = 10;
    taskcfg.seed = 13;
    const GeneratedTask task = generate_task(taskcfg);
    CorpusStore corpus;
    for (const Document& doc : task.documents) {
        for (auto& p : split_document(doc, taskcfg.passage_words)) corpus.add(std::move(p));
    }
    require(corpus.size() <= 1000, "oracle corpus too large");

    // --- BM25 exhaustive oracle (independent tf/df/len computation)
    const InvertedIndex index = InvertedIndex::build(corpus);
    {
        std::vector<TokenStream> doc_tokens;
        double total_len = 0.0;
        for (const auto& p : corpus.passages()) {
            doc_tokens.push_back(tokenize(p.text));
            total_len += static_cast<double>(doc_tokens.back().size());
        }
        const double avg_len = total_len / static_cast<double>(corpus.size());
        const double k1 = 0.82, b = 0.68;

        for (std::size_t q = 0; q < 6; ++q) {
            const TokenStream query = tokenize(task.train_pairs[q].question);
            std::vector<ScoredPassage> oracle;
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                double s = 0.0;
                for (const auto& term : query.tokens) {
                    double tf = 0.0;
                    for (const auto& t : doc_tokens[i].tokens) tf += t == term ? 1.0 : 0.0;
                    if (tf == 0.0) continue;
                    double df = 0.0;
                    for (const auto& dt : doc_tokens) {
                        for (const auto& t : dt.tokens) {
                            if (t == term) {
                                df += 1.0;
                                break;
                            }
                        }
                    }
                    const double n = static_cast<double>(corpus.size());
                    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
                    const double len = static_cast<double>(doc_tokens[i].size());
                    s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg_len));
                }
                if (s > 0.0) oracle.push_back({corpus.passages()[i].passage_id, s});
            }
            sort_hits(oracle);
            const auto got = index.topk(query, static_cast<int>(corpus.size()));
            require(got.size() == oracle.size(), "BM25 result count differs from oracle");
            for (std::size_t i = 0; i < got.size(); ++i) {
                require(got[i].passage_id == oracle[i].passage_id, "BM25 rank differs from oracle");
                require(std::abs(got[i].score - oracle[i].score) <= 1e-10,
                        "BM25 score differs from oracle");
            }
        }
    }

    // --- dense exact search vs brute force
    {
        Rng rng(17);
        const int dim = 12;
        const std::size_t n = 500;
        std::vector<std::string> ids;
        std::vector<double> matrix;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back("v" + std::to_string(i));
            const auto row = random_unit(dim, rng);
            matrix.insert(matrix.end(), row.begin(), row.end());
        }
        const DenseIndex dense = DenseIndex::from_rows(ids, matrix, dim);
        for (int trial = 0; trial < 10; ++trial) {
            Embedding q;
            q.values = random_unit(dim, rng);
            std::vector<ScoredPassage> oracle;
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (int d = 0; d < dim; ++d) s += matrix[i * dim + d] * q.values[d];
                oracle.push_back({ids[i], s});
            }
            sort_hits(oracle);
            const auto got = dense.search(q, static_cast<int>(n));
            for (std::size_t i = 0; i < n; ++i) {
                require(got[i].passage_id == oracle[i].passage_id, "dense rank differs from oracle");
                require(std::abs(got[i].score - oracle[i].score) <= 1e-10,
                        "dense score differs from oracle");
            }
        }
    }

    // --- coarse and fine pools vs exhaustive dot-product ranking
    {
        std::vector<TrainingPair> pairs(task.train_pairs.begin(), task.train_pairs.begin() + 8);
        MinerConfig miner_cfg;
        miner_cfg.hidden_dim = 8;
        miner_cfg.train.epochs = 2;
        miner_cfg.train.early_stopping = false;
        miner_cfg.train.hard_neg_count = 0;
        const int M = 15;
        for (int dim : {kCoarseMinerDim, kFineMinerDim}) {
            const EncoderParams miner = train_miner(pairs, corpus, dim, miner_cfg, 2);
            const MiningResult mined =
                mine_semantic(pairs, corpus, M, miner,
                              dim == kCoarseMinerDim ? Strategy::coarse : Strategy::fine, 2);
            for (const auto& pair : pairs) {
                const Embedding q = encode_question(miner, tokenize(pair.question));
                std::vector<ScoredPassage> oracle;
                for (const auto& p : corpus.passages()) {
                    if (p.passage_id == pair.gold_passage_id) continue;
                    const Embedding d = encode_passage(miner, p.title, p.text);
                    double s = 0.0;
                    for (std::size_t k = 0; k < q.values.size(); ++k) s += q.values[k] * d.values[k];
                    oracle.push_back({p.passage_id, s});
                }
                sort_hits(oracle);
                const auto& pool = mined.pools.at(question_hash(pair.question));
                require(pool.passage_ids.size() == static_cast<std::size_t>(M),
                        "semantic pool size mismatch");
                for (int i = 0; i < M; ++i) {
                    require(pool.passage_ids[i] == oracle[i].passage_id,
                            "semantic pool differs from exhaustive oracle");
                }
            }
        }
    }

    // --- RRF vs direct formula evaluation
    {
        Rng rng(23);
        for (int trial = 0; trial < 20; ++trial) {
            const int members = 2 + static_cast<int>(uniform_below(rng, 3));
            std::vector<Ranking> member_rankings(members);
            std::map<std::string, double> oracle;
            for (int m = 0; m < members; ++m) {
                member_rankings[m].query_key = "q";
                std::vector<std::string> ids;
                for (int i = 0; i < 12; ++i) ids.push_back("d" + std::to_string(i));
                shuffle(ids, rng);
                const std::size_t depth = 4 + uniform_below(rng, 8);
                for (std::size_t r = 0; r < depth; ++r) {
                    member_rankings[m].hits.push_back({ids[r], 100.0 - static_cast<double>(r)});
                    oracle[ids[r]] += 1.0 / (60.0 + static_cast<double>(r + 1));
                }
            }
            FusionSpec spec;
            for (int m = 0; m < members; ++m) {
                spec.members.push_back("m" + std::to_string(m));
                spec.coefficients.push_back(1.0);
            }
            spec.rrf_k = 60.0;
            const Ranking fused = rrf_fusion(member_rankings, spec);
            require(fused.hits.size() == oracle.size(), "RRF member count mismatch");
            std::vector<ScoredPassage> expected;
            for (const auto& [id, s] : oracle) expected.push_back({id, s});
            sort_hits(expected);
            for (std::size_t i = 0; i < expected.size(); ++i) {
                require(fused.hits[i].passage_id == expected[i].passage_id,
                        "RRF order differs from direct formula");
                require(std::abs(fused.hits[i].score - expected[i].score) <= 1e-10,
                        "RRF score differs from direct formula");
            }
        }
    }

    // --- all four metrics vs brute-force implementations
    {
        Rng rng(29);
        JudgmentSet graded;
        JudgmentSet spans;
        std::vector<Ranking> rankings;
        for (int q = 0; q < 8; ++q) {
            const std::string key = "q" + std::to_string(q);
            std::vector<std::string> ids;
            for (std::size_t i = 0; i < corpus.size(); i += 7) {
                ids.push_back(corpus.passages()[i].passage_id);
            }
            shuffle(ids, rng);
            ids.resize(25);
            Ranking r;
            r.query_key = key;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                r.hits.push_back({ids[i], 25.0 - static_cast<double>(i)});
            }
            rankings.push_back(std::move(r));

            std::map<std::string, int> rel;
            for (const auto& id : ids) rel[id] = static_cast<int>(uniform_below(rng, 3));
            rel[ids[uniform_below(rng, ids.size())]] = 2;
            graded.emplace(key, Judgment::from_qrels(rel));
            spans.emplace(key, Judgment::from_spans({task.train_pairs[q].answer_spans.front()}));
        }

        // top-k accuracy oracle: linear scan with contains_answer_span
        const std::vector<int> ks = {1, 5, 10, 20, 100};
        const auto acc = topk_accuracy(rankings, spans, ks, corpus);
        for (int k : ks) {
            int hits = 0;
            for (const auto& r : rankings) {
                const auto& answers = spans.at(r.query_key).answer_spans;
                bool found = false;
                for (int i = 0; i < k && i < static_cast<int>(r.hits.size()); ++i) {
                    if (contains_answer_span(corpus.at(r.hits[i].passage_id), answers)) {
                        found = true;
                        break;
                    }
                }
                hits += found ? 1 : 0;
            }
            const double expected = static_cast<double>(hits) / static_cast<double>(rankings.size());
            require(std::abs(acc.at(k) - expected) <= 1e-10, "top-k accuracy differs from oracle");
        }

        // mrr oracle
        {
            const int k = 10;
            double expected = 0.0;
            for (const auto& r : rankings) {
                const auto& rel = graded.at(r.query_key).relevance;
                for (int i = 0; i < k && i < static_cast<int>(r.hits.size()); ++i) {
                    auto it = rel.find(r.hits[i].passage_id);
                    if (it != rel.end() && it->second > 0) {
                        expected += 1.0 / (i + 1);
                        break;
                    }
                }
            }
            expected /= static_cast<double>(rankings.size());
            require(std::abs(mrr_at_k(rankings, graded, k) - expected) <= 1e-10,
                    "MRR differs from oracle");
        }

        // recall oracle
        {
            const int k = 12;
            double expected = 0.0;
            for (const auto& r : rankings) {
                const auto& rel = graded.at(r.query_key).relevance;
                int pos = 0, found = 0;
                for (const auto& [id, g] : rel) pos += g > 0 ? 1 : 0;
                for (int i = 0; i < k && i < static_cast<int>(r.hits.size()); ++i) {
                    auto it = rel.find(r.hits[i].passage_id);
                    if (it != rel.end() && it->second > 0) ++found;
                }
                expected += static_cast<double>(found) / static_cast<double>(pos);
            }
            expected /= static_cast<double>(rankings.size());
            require(std::abs(recall_at_k(rankings, graded, k).value - expected) <= 1e-10,
                    "recall differs from oracle");
        }

        // ndcg oracle
        {
            const int k = 10;
            double expected = 0.0;
            int counted = 0;
            for (const auto& r : rankings) {
                const auto& rel = graded.at(r.query_key).relevance;
                double dcg = 0.0;
                for (int i = 0; i < k && i < static_cast<int>(r.hits.size()); ++i) {
                    auto it = rel.find(r.hits[i].passage_id);
                    const int g = it == rel.end() ? 0 : it->second;
                    dcg += (std::pow(2.0, g) - 1.0) / std::log2(static_cast<double>(i + 2));
                }
                std::vector<int> grades;
                for (const auto& [id, g] : rel) grades.push_back(g);
                std::sort(grades.rbegin(), grades.rend());
                double idcg = 0.0;
                for (int i = 0; i < k && i < static_cast<int>(grades.size()); ++i) {
                    idcg += (std::pow(2.0, grades[i]) - 1.0) / std::log2(static_cast<double>(i + 2));
                }
                if (idcg > 0.0) {
                    expected += dcg / idcg;
                    ++counted;
                }
            }
            expected /= static_cast<double>(counted);
            require(std::abs(ndcg_at_k(rankings, graded, k).value - expected) <= 1e-10,
                    "NDCG differs from oracle");
        }
    }
}

void check_mining_invariants() {
    TaskGenConfig taskcfg;
    taskcfg.n_docs = 120;
    taskcfg.n_gold_pairs = 150;
    taskcfg.n_dev_pairs = 20;
    taskcfg.n_test_pairs = 30;
    taskcfg.seed = 31;
    const GeneratedTask task = generate_task(taskcfg);
    CorpusStore corpus;
    for (const Document& doc : task.documents) {
        for (auto& p : split_document(doc, taskcfg.passage_words)) corpus.add(std::move(p));
    }
    const auto& pairs = task.train_pairs;

    MinerConfig miner_cfg;
    miner_cfg.hidden_dim = 16;
    miner_cfg.train.epochs = 3;
    miner_cfg.train.early_stopping = false;
    miner_cfg.train.hard_neg_count = 0;
    const int M = 40;

    const MiningResult coarse = mine_coarse(pairs, corpus, M, miner_cfg, 4);
    const MiningResult fine = mine_fine(pairs, corpus, M, miner_cfg, 4);
    const InvertedIndex index = InvertedIndex::build(corpus);
    const MiningResult bm25 = mine_bm25(pairs, index, corpus, M);
    const MiningResult context = mine_context(pairs, corpus, M);
    Rng rng(7);
    const MiningResult mixed =
        mix_pools({&coarse.pools, &fine.pools, &bm25.pools, &context.pools}, M, rng);

    std::size_t pools_checked = 0;
    for (const auto& pair : pairs) {
        const std::string key = question_hash(pair.question);
        for (const auto* result : {&coarse, &fine, &bm25, &context, &mixed}) {
            const auto& pool = result->pools.at(key);
            for (const auto& id : pool.passage_ids) {
                require(id != pair.gold_passage_id, "pool contains its gold passage");
            }
            ++pools_checked;
        }
        for (const auto& id : bm25.pools.at(key).passage_ids) {
            require(!contains_answer_span(corpus.at(id), pair.answer_spans),
                    "BM25 pool member contains an answer span");
        }
        const std::string gold_doc = corpus.at(pair.gold_passage_id).doc_id;
        for (const auto& id : context.pools.at(key).passage_ids) {
            const Passage* p = corpus.find(id);
            if (!p) {
                for (const auto& synth : context.synthetic_passages) {
                    if (synth.passage_id == id) p = &synth;
                }
            }
            require(p != nullptr, "context pool member unresolvable");
            require(p->doc_id == gold_doc, "context pool member outside the gold document");
        }
    }
    require(pools_checked == pairs.size() * 5, "unexpected pool count");
}

void check_fusion_algebra() {
    Rng rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        const int members = 2 + static_cast<int>(uniform_below(rng, 3));
        FusionSpec spec;
        std::vector<std::vector<double>> qs, ps;
        for (int m = 0; m < members; ++m) {
            spec.members.push_back("m" + std::to_string(m));
            spec.coefficients.push_back(0.25 + uniform_real(rng) * 2.0);
            const int dim = 3 + static_cast<int>(uniform_below(rng, 8));
            qs.push_back(random_unit(dim, rng));
            ps.push_back(random_unit(dim, rng));
        }
        const auto fq = fuse_embedding(qs, spec);
        const auto fp = fuse_embedding(ps, spec);
        double fused_dot = 0.0;
        for (std::size_t i = 0; i < fq.size(); ++i) fused_dot += fq[i] * fp[i];
        double expected = 0.0;
        for (int m = 0; m < members; ++m) {
            double s = 0.0;
            for (std::size_t i = 0; i < qs[m].size(); ++i) s += qs[m][i] * ps[m][i];
            expected += spec.coefficients[m] * spec.coefficients[m] * s;
        }
        require(std::abs(fused_dot - expected) <= 1e-10, "fused dot != sum of alpha^2 * s_m");
    }

    // single-member ranking identity
    {
        const int dim = 8;
        const std::size_t n = 120;
        std::vector<std::string> ids;
        std::vector<double> matrix;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back("p" + std::to_string(i));
            const auto row = random_unit(dim, rng);
            matrix.insert(matrix.end(), row.begin(), row.end());
        }
        const DenseIndex member = DenseIndex::from_rows(ids, matrix, dim);
        Embedding q;
        q.values = random_unit(dim, rng);
        const auto base = member.search(q, static_cast<int>(n));
        for (double alpha : {0.5, 1.0, 2.0}) {
            FusionSpec spec;
            spec.members = {"only"};
            spec.coefficients = {alpha};
            const FusedIndex fused = build_fused_index({&member}, spec);
            const auto got = fused_search(fused, fuse_embedding({q.values}, spec),
                                          static_cast<int>(n));
            require(got.size() == base.size(), "single-member fusion changed result count");
            for (std::size_t i = 0; i < got.size(); ++i) {
                require(got[i].passage_id == base[i].passage_id,
                        "single-member fusion changed the ranking");
            }
        }
    }

    // RRF constant: ranks 1 and 2 at k=60
    {
        Ranking a, b;
        a.query_key = b.query_key = "q";
        a.hits = {{"doc", 2.0}, {"other", 1.0}};
        b.hits = {{"other", 2.0}, {"doc", 1.0}};
        FusionSpec spec;
        spec.members = {"a", "b"};
        spec.coefficients = {1.0, 1.0};
        spec.rrf_k = 60.0;
        const Ranking fused = rrf_fusion({a, b}, spec);
        double doc_score = -1.0;
        for (const auto& hit : fused.hits) {
            if (hit.passage_id == "doc") doc_score = hit.score;
        }
        require(doc_score == 1.0 / 61.0 + 1.0 / 62.0, "RRF score for ranks (1,2) not exact");
    }
}

PipelineConfig desk_config(const fs::path& task_dir, const fs::path& out_dir) {
    PipelineConfig config;
    config.name = "accept";
    config.output_dir = out_dir;
    config.documents_path = task_dir / "documents.jsonl";
    config.split_width = 50;
    config.stage1_pairs_path = task_dir / "synthetic.jsonl";
    config.train_pairs_path = task_dir / "train.jsonl";
    config.dev_pairs_path = task_dir / "dev.jsonl";
    config.test_pairs_path = task_dir / "test.jsonl";
    config.embed_dim = 128;
    config.hidden_dim = 64;
    config.encoder_init_seed = 1;
    config.pool_size = 100;
    config.miner.hidden_dim = 48;
    config.miner.train.epochs = 10;
    config.miner.train.batch_size = 32;
    config.miner.train.learning_rate = 2e-3;
    config.miner.train.loss_scale = 20.0;
    config.miner.train.early_stopping = false;
    config.miner.train.hard_neg_count = 0;
    config.stage1_train.epochs = 4;
    config.stage1_train.batch_size = 32;
    config.stage1_train.hard_neg_count = 2;
    config.stage1_train.pool_size = 100;
    config.stage1_train.learning_rate = 1e-3;
    config.stage1_train.loss_scale = 20.0;
    config.stage1_train.early_stopping = false;
    config.stage2_train.epochs = 5;
    config.stage2_train.batch_size = 32;
    config.stage2_train.hard_neg_count = 2;
    config.stage2_train.pool_size = 100;
    config.stage2_train.learning_rate = 1e-3;
    config.stage2_train.loss_scale = 20.0;
    config.stage2_train.patience = 5;
    config.retrieve_k = 100;
    config.eval_ks = {1, 5, 10, 20, 100};
    return config;
}

void check_directional_reproduction() {
    const fs::path task_dir = g_workdir / "task7";
    const fs::path out_dir = g_workdir / "out7";

    TaskGenConfig taskcfg;  // defaults: 420 docs x 5 passages, 660 pairs, seed 9
    const GeneratedTask task = write_task(taskcfg, task_dir);
    require(task.documents.size() >= 400, "need at least 400 documents");
    std::size_t passages = 0;
    for (const auto& doc : task.documents) {
        passages += split_document(doc, taskcfg.passage_words).size();
        require(split_document(doc, taskcfg.passage_words).size() > 1, "documents must be multi-passage");
    }
    require(passages >= 2000, "need at least 2000 passages");
    const std::size_t pair_count =
        task.train_pairs.size() + task.dev_pairs.size() + task.test_pairs.size();
    require(pair_count >= 500, "need at least 500 gold pairs");
    for (const auto* pairs : {&task.train_pairs, &task.dev_pairs, &task.test_pairs}) {
        for (const auto& pair : *pairs) {
            require(!pair.answer_spans.empty(), "gold pairs must carry answer spans");
        }
    }

    PipelineOptions options;
    options.threads = 4;

    PipelineConfig base = desk_config(task_dir, out_dir);
    std::map<std::string, std::map<int, double>> results;
    for (const std::string strategy : {"rnd", "coarse", "fine", "bm25", "context", "mixed"}) {
        PipelineConfig cell = base;
        cell.stage2_strategy = strategy;
        results[strategy] = run_pipeline(cell, options).topk_accuracy;
    }
    PipelineConfig no_stage1 = base;
    no_stage1.stage1_enabled = false;
    no_stage1.stage2_strategy = "rnd";
    const auto without_stage1 = run_pipeline(no_stage1, options).topk_accuracy;

    std::ostringstream summary;
    summary << "top1:";
    for (const auto& [name, acc] : results) summary << ' ' << name << '=' << acc.at(1);
    summary << " | top20 two-stage=" << results.at("rnd").at(20)
            << " no-stage1=" << without_stage1.at(20);
    std::cout << "  " << summary.str() << std::endl;

    const double rnd_top1 = results.at("rnd").at(1);
    int strictly_better = 0;
    for (const std::string strategy : {"coarse", "fine", "bm25", "context", "mixed"}) {
        const double top1 = results.at(strategy).at(1);
        require(top1 >= rnd_top1, strategy + " Top-1 below the Rnd-only model");
        if (top1 >= rnd_top1 + 0.01) ++strictly_better;
    }
    require(strictly_better >= 3,
            "fewer than three strategies exceed Rnd by a full point (got " +
                std::to_string(strictly_better) + ")");
    require(results.at("rnd").at(20) > without_stage1.at(20),
            "two-stage training does not beat no-Stage-1 on Top-20");
}

void check_reproducibility() {
    const fs::path task_dir = g_workdir / "task8";
    TaskGenConfig taskcfg;
    taskcfg.n_docs = 100;
    taskcfg.n_gold_pairs = 120;
    taskcfg.n_dev_pairs = 20;
    taskcfg.n_test_pairs = 30;
    taskcfg.seed = 77;
    write_task(taskcfg, task_dir);

    PipelineConfig config = desk_config(task_dir, g_workdir / "out8a");
    config.pool_size = 20;
    config.stage2_strategy = "mixed";
    config.miner.train.epochs = 2;
    config.stage1_train.epochs = 2;
    config.stage2_train.epochs = 2;

    PipelineOptions options;
    options.reproducible = true;
    options.seed = 5;

    options.cache_dir = g_workdir / "out8a";
    const PipelineResult a = run_pipeline(config, options);
    options.cache_dir = g_workdir / "out8b";
    const PipelineResult b = run_pipeline(config, options);

    require(read_file(a.metrics_csv) == read_file(b.metrics_csv),
            "metric CSVs differ between identical runs");
    require(read_file(a.run_file) == read_file(b.run_file),
            "run files differ between identical runs");
}

}  // namespace

int main() {
    g_workdir = fs::temp_directory_path() / "hardneg_acceptance";
    fs::remove_all(g_workdir);
    fs::create_directories(g_workdir);

    criterion(1, "loss identities (zero at B=1, ln 4 uniform, L = 0.5(L_f+L_b))",
              check_loss_identities);
    criterion(2, "analytic gradients vs central finite differences, 3 seeds", check_gradients);
    criterion(3, "batch contract: (N+1)*B forward and B backward candidates", check_batch_contract);
    criterion(4, "brute-force oracle equivalence (BM25, dense, pools, RRF, metrics)",
              check_oracle_equivalence);
    criterion(5, "mining invariants (gold excluded, BM25 span-free, context in-document)",
              check_mining_invariants);
    criterion(6, "fusion algebra (dot identity, single-member identity, exact RRF)",
              check_fusion_algebra);
    criterion(7, "directional reproduction: hard negatives lift Top-1, stage 1 lifts Top-20",
              check_directional_reproduction);
    criterion(8, "byte-identical metric CSVs for identical config and seed", check_reproducibility);

    if (g_failures == 0) {
        std::cout << "all acceptance criteria passed" << std::endl;
    } else {
        std::cout << g_failures << " acceptance criteria failed" << std::endl;
    }
    return g_failures;
}
