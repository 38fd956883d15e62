#include "hardneg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hardneg/dense_index.hpp"
#include "hardneg/eval.hpp"
#include "hardneg/parallel.hpp"

namespace hardneg {
namespace {

double log_sum_exp(const std::vector<double>& row) {
    double mx = row.front();
    for (double v : row) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    return mx + std::log(sum);
}

std::vector<double> softmax_row(const std::vector<double>& row) {
    double mx = row.front();
    for (double v : row) mx = std::max(mx, v);
    double sum = 0.0;
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
        out[j] = std::exp(row[j] - mx);
        sum += out[j];
    }
    for (double& v : out) v /= sum;
    return out;
}

struct BatchForward {
    std::vector<ForwardCache> question_caches;   // B
    std::vector<ForwardCache> candidate_caches;  // C = B golds then B*N negatives
    std::vector<std::vector<double>> fw;         // B x C, scaled scores
    LossReport report;
};

BatchForward batch_forward(const EncoderParams& params, const TrainingBatch& batch,
                           const TrainConfig& config) {
    const std::size_t B = batch.size();
    if (B == 0) throw Error("empty training batch");
    if (batch.gold_passages.size() != B || batch.hard_negatives.size() != B)
        throw Error("training batch fields have inconsistent sizes");
    const int N = batch.negatives_per_question();
    for (const auto& negs : batch.hard_negatives) {
        if (negs.size() != static_cast<std::size_t>(N))
            throw Error("every question must carry the same number of hard negatives");
    }
    const std::size_t C = B * static_cast<std::size_t>(N + 1);

    BatchForward out;
    out.question_caches.resize(B);
    out.candidate_caches.resize(C);
    for (std::size_t i = 0; i < B; ++i) {
        out.question_caches[i] = encoder_forward(params, question_token_ids(params, batch.questions[i]));
        const BatchPassage& gold = batch.gold_passages[i];
        out.candidate_caches[i] = encoder_forward(params, passage_token_ids(params, gold.title, gold.text));
    }
    for (std::size_t i = 0; i < B; ++i) {
        for (int r = 0; r < N; ++r) {
            const BatchPassage& neg = batch.hard_negatives[i][r];
            out.candidate_caches[B + i * N + r] =
                encoder_forward(params, passage_token_ids(params, neg.title, neg.text));
        }
    }

    out.fw.assign(B, std::vector<double>(C, 0.0));
    for (std::size_t i = 0; i < B; ++i) {
        const auto& q = out.question_caches[i].embedding;
        for (std::size_t j = 0; j < C; ++j) {
            const auto& p = out.candidate_caches[j].embedding;
            double s = 0.0;
            for (std::size_t d = 0; d < q.size(); ++d) s += q[d] * p[d];
            s *= config.loss_scale;
            if (!std::isfinite(s)) throw NonFiniteLoss(i, j);
            out.fw[i][j] = s;
        }
    }

    // Backward direction ranks questions for each gold passage; hard
    // negatives take no part, so the matrix is the transposed B x B block.
    std::vector<std::vector<double>> bw(B, std::vector<double>(B, 0.0));
    for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t n = 0; n < B; ++n) bw[i][n] = out.fw[n][i];
    }
    out.report = bidirectional_loss_from_scores(out.fw, bw);
    return out;
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw Error("batch_size must be >= 1");
    if (hard_neg_count < 0) throw Error("hard_neg_count must be >= 0");
    if (pool_size < 1) throw Error("pool_size must be >= 1");
    if (hard_neg_count > pool_size) throw Error("hard_neg_count must be <= pool_size");
    if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
    if (epochs < 0) throw Error("epochs must be >= 0");
    if (!(loss_scale > 0.0)) throw Error("loss_scale must be > 0");
    if (patience < 1) throw Error("patience must be >= 1");
    if (early_stop_metric != "recall_at_1")
        throw Error("unsupported early_stop_metric '" + early_stop_metric + "'");
}

TrainConfig TrainConfig::from_kv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    nlohmann::json j = nlohmann::json::object();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto trim = [](const std::string& s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string{};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        const std::string content = trim(line);
        if (content.empty()) continue;
        const std::size_t eq = content.find('=');
        if (eq == std::string::npos)
            throw ParseError(path, line_no, "expected 'key = value'");
        const std::string key = trim(content.substr(0, eq));
        const std::string value = trim(content.substr(eq + 1));
        if (key == "early_stop_metric") {
            j[key] = value;
        } else if (key == "early_stopping") {
            if (value != "true" && value != "false")
                throw ParseError(path, line_no, "early_stopping must be true or false");
            j[key] = (value == "true");
        } else {
            try {
                std::size_t used = 0;
                const double num = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                j[key] = num;
            } catch (const std::exception&) {
                throw ParseError(path, line_no, "invalid numeric value '" + value + "'");
            }
        }
    }
    return from_json(j);
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "batch_size") cfg.batch_size = value.get<int>();
        else if (key == "hard_neg_count") cfg.hard_neg_count = value.get<int>();
        else if (key == "pool_size") cfg.pool_size = value.get<int>();
        else if (key == "learning_rate") cfg.learning_rate = value.get<double>();
        else if (key == "epochs") cfg.epochs = value.get<int>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "loss_scale") cfg.loss_scale = value.get<double>();
        else if (key == "patience") cfg.patience = value.get<int>();
        else if (key == "early_stopping") cfg.early_stopping = value.get<bool>();
        else if (key == "early_stop_metric") cfg.early_stop_metric = value.get<std::string>();
        else throw Error("unknown train config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

nlohmann::json TrainConfig::to_json() const {
    return {
        {"batch_size", batch_size},
        {"hard_neg_count", hard_neg_count},
        {"pool_size", pool_size},
        {"learning_rate", learning_rate},
        {"epochs", epochs},
        {"seed", seed},
        {"loss_scale", loss_scale},
        {"patience", patience},
        {"early_stopping", early_stopping},
        {"early_stop_metric", early_stop_metric},
    };
}

LossReport bidirectional_loss_from_scores(const std::vector<std::vector<double>>& forward_scores,
                                          const std::vector<std::vector<double>>& backward_scores) {
    const std::size_t B = forward_scores.size();
    if (B == 0 || backward_scores.size() != B)
        throw Error("score matrices must have B > 0 rows each");
    const std::size_t C = forward_scores.front().size();
    if (C < B) throw Error("forward score matrix needs at least B columns");

    LossReport report;
    report.forward_candidates_per_question = static_cast<int>(C);
    report.backward_candidates_per_question = static_cast<int>(B);
    report.per_example_forward.reserve(B);

    for (std::size_t i = 0; i < B; ++i) {
        if (forward_scores[i].size() != C || backward_scores[i].size() != B)
            throw Error("ragged score matrix");
        for (std::size_t j = 0; j < C; ++j) {
            if (!std::isfinite(forward_scores[i][j])) throw NonFiniteLoss(i, j);
        }
        const double lf = log_sum_exp(forward_scores[i]) - forward_scores[i][i];
        report.per_example_forward.push_back(lf);
        report.forward_loss += lf;
        const double lb = log_sum_exp(backward_scores[i]) - backward_scores[i][i];
        report.backward_loss += lb;
    }
    report.forward_loss /= static_cast<double>(B);
    report.backward_loss /= static_cast<double>(B);
    report.total = 0.5 * (report.forward_loss + report.backward_loss);
    return report;
}

ScoreGrads bidirectional_loss_grads_from_scores(
    const std::vector<std::vector<double>>& forward_scores,
    const std::vector<std::vector<double>>& backward_scores) {
    const std::size_t B = forward_scores.size();
    const std::size_t C = forward_scores.front().size();
    ScoreGrads grads;
    grads.forward.assign(B, std::vector<double>(C, 0.0));
    grads.backward.assign(B, std::vector<double>(B, 0.0));
    const double half_inv_b = 0.5 / static_cast<double>(B);
    for (std::size_t i = 0; i < B; ++i) {
        const std::vector<double> pf = softmax_row(forward_scores[i]);
        for (std::size_t j = 0; j < C; ++j) {
            grads.forward[i][j] = half_inv_b * (pf[j] - (i == j ? 1.0 : 0.0));
        }
        const std::vector<double> pb = softmax_row(backward_scores[i]);
        for (std::size_t n = 0; n < B; ++n) {
            grads.backward[i][n] = half_inv_b * (pb[n] - (i == n ? 1.0 : 0.0));
        }
    }
    return grads;
}

LossReport forward_loss(const EncoderParams& params, const TrainingBatch& batch,
                        const TrainConfig& config) {
    return batch_forward(params, batch, config).report;
}

BatchGradients loss_and_gradients(const EncoderParams& params, const TrainingBatch& batch,
                                  const TrainConfig& config) {
    BatchForward fwd = batch_forward(params, batch, config);
    const std::size_t B = batch.size();
    const std::size_t C = fwd.candidate_caches.size();
    const std::size_t D = static_cast<std::size_t>(params.embed_dim);

    std::vector<std::vector<double>> bw(B, std::vector<double>(B, 0.0));
    for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t n = 0; n < B; ++n) bw[i][n] = fwd.fw[n][i];
    }
    const ScoreGrads sg = bidirectional_loss_grads_from_scores(fwd.fw, bw);

    std::vector<std::vector<double>> g_question(B, std::vector<double>(D, 0.0));
    std::vector<std::vector<double>> g_candidate(C, std::vector<double>(D, 0.0));
    const double scale = config.loss_scale;
    for (std::size_t i = 0; i < B; ++i) {
        const auto& q = fwd.question_caches[i].embedding;
        for (std::size_t j = 0; j < C; ++j) {
            const double g = sg.forward[i][j] * scale;
            if (g == 0.0) continue;
            const auto& p = fwd.candidate_caches[j].embedding;
            for (std::size_t d = 0; d < D; ++d) {
                g_question[i][d] += g * p[d];
                g_candidate[j][d] += g * q[d];
            }
        }
    }
    // Backward block: bw[i][n] = scale * gold_i . q_n.
    for (std::size_t i = 0; i < B; ++i) {
        const auto& gold = fwd.candidate_caches[i].embedding;
        for (std::size_t n = 0; n < B; ++n) {
            const double g = sg.backward[i][n] * scale;
            if (g == 0.0) continue;
            const auto& q = fwd.question_caches[n].embedding;
            for (std::size_t d = 0; d < D; ++d) {
                g_candidate[i][d] += g * q[d];
                g_question[n][d] += g * gold[d];
            }
        }
    }

    BatchGradients out;
    out.report = std::move(fwd.report);
    out.grads = EncoderGrads::zeros_like(params);
    for (std::size_t i = 0; i < B; ++i) {
        encoder_backward(params, fwd.question_caches[i], g_question[i], out.grads);
    }
    for (std::size_t j = 0; j < C; ++j) {
        encoder_backward(params, fwd.candidate_caches[j], g_candidate[j], out.grads);
    }
    return out;
}

const Passage& PassageResolver::resolve(const std::string& passage_id) const {
    if (const Passage* p = primary_->find(passage_id)) return *p;
    if (extra_) {
        if (const Passage* p = extra_->find(passage_id)) return *p;
    }
    throw UnresolvedReference(passage_id);
}

TrainingBatch build_batch(std::span<const TrainingPair> pairs, const PoolSet& pools,
                          const TrainConfig& config, const PassageResolver& resolver, Rng& rng) {
    TrainingBatch batch;
    const int N = config.hard_neg_count;
    batch.questions.reserve(pairs.size());
    batch.gold_passages.reserve(pairs.size());
    batch.hard_negatives.reserve(pairs.size());

    for (const TrainingPair& pair : pairs) {
        const Passage& gold = resolver.resolve(pair.gold_passage_id);
        batch.questions.push_back(tokenize(pair.question));
        batch.gold_passages.push_back(BatchPassage{gold.passage_id, gold.title, gold.text});

        std::vector<BatchPassage> negatives;
        if (N > 0) {
            const std::string key = question_hash(pair.question);
            auto it = pools.find(key);
            const std::size_t have = it == pools.end() ? 0 : it->second.passage_ids.size();
            if (have < static_cast<std::size_t>(N)) throw PoolTooSmall(key, have, N);
            const auto picks = sample_without_replacement(have, static_cast<std::size_t>(N), rng);
            negatives.reserve(picks.size());
            for (std::size_t idx : picks) {
                const std::string& neg_id = it->second.passage_ids[idx];
                if (neg_id == pair.gold_passage_id)
                    throw Error("pool for question " + key + " contains its gold passage");
                const Passage& neg = resolver.resolve(neg_id);
                negatives.push_back(BatchPassage{neg.passage_id, neg.title, neg.text});
            }
        }
        batch.hard_negatives.push_back(std::move(negatives));
    }
    return batch;
}

AdamOptimizer::AdamOptimizer(const EncoderParams& params) {
    const auto sizes = {params.token_embeddings.size(), params.hidden_weight.size(),
                        params.hidden_bias.size(), params.proj_weight.size(),
                        params.proj_bias.size()};
    for (std::size_t n : sizes) {
        m_.emplace_back(n, 0.0);
        v_.emplace_back(n, 0.0);
    }
}

void AdamOptimizer::reset() {
    for (auto& m : m_) std::fill(m.begin(), m.end(), 0.0);
    for (auto& v : v_) std::fill(v.begin(), v.end(), 0.0);
    t_ = 0;
}

void AdamOptimizer::step(EncoderParams& params, const EncoderGrads& grads, double learning_rate) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    ++t_;
    const double bias1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));

    std::vector<double>* tensors[] = {&params.token_embeddings, &params.hidden_weight,
                                      &params.hidden_bias, &params.proj_weight, &params.proj_bias};
    const std::vector<double>* grad_tensors[] = {&grads.token_embeddings, &grads.hidden_weight,
                                                 &grads.hidden_bias, &grads.proj_weight,
                                                 &grads.proj_bias};
    for (std::size_t t = 0; t < 5; ++t) {
        auto& theta = *tensors[t];
        const auto& g = *grad_tensors[t];
        auto& m = m_[t];
        auto& v = v_[t];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
            v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
            const double mhat = m[i] / bias1;
            const double vhat = v[i] / bias2;
            theta[i] -= learning_rate * mhat / (std::sqrt(vhat) + kEps);
        }
    }
}

std::string TrainHistory::to_csv() const {
    std::ostringstream out;
    out << "stage,epoch,L_f,L_b,L,dev_recall@1\n";
    const auto emit = [&out](int stage, const std::vector<EpochStats>& rows) {
        for (const EpochStats& row : rows) {
            out << stage << ',' << row.epoch << ',' << format_metric(row.forward_loss) << ','
                << format_metric(row.backward_loss) << ',' << format_metric(row.total) << ',';
            if (row.dev_recall_at_1) out << format_metric(*row.dev_recall_at_1);
            out << '\n';
        }
    };
    emit(1, stage1);
    emit(2, stage2);
    return out.str();
}

double dev_recall_at_1(const EncoderParams& params, const CorpusStore& corpus,
                       const std::vector<TrainingPair>& dev_pairs, int threads) {
    if (dev_pairs.empty()) throw Error("dev set is empty");
    const DenseIndex index = DenseIndex::build(corpus, params, threads);

    std::vector<Embedding> queries(dev_pairs.size());
    std::vector<std::string> failures(dev_pairs.size());
    parallel_for(dev_pairs.size(), threads, [&](std::size_t i) {
        try {
            queries[i] = encode_question(params, tokenize(dev_pairs[i].question));
        } catch (const Error& e) {
            failures[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < dev_pairs.size(); ++i) {
        if (!failures[i].empty()) throw Error("dev question " + std::to_string(i) + ": " + failures[i]);
    }
    const auto results = index.search_batch(queries, 1, threads);

    std::vector<Ranking> rankings;
    JudgmentSet judgments;
    rankings.reserve(dev_pairs.size());
    for (std::size_t i = 0; i < dev_pairs.size(); ++i) {
        const std::string key = "dev" + std::to_string(i);
        rankings.push_back(Ranking{key, results[i]});
        judgments.emplace(key, Judgment::from_qrels({{dev_pairs[i].gold_passage_id, 1}}));
    }
    return recall_at_k(rankings, judgments, 1).value;
}

namespace {

void run_stage(EncoderParams& params, const std::vector<TrainingPair>& pairs, const PoolSet* pools,
               const TrainConfig& config, const TrainTask& task, std::vector<EpochStats>& history) {
    config.validate();
    if (config.epochs == 0 || pairs.empty()) return;
    const bool use_dev = task.dev_pairs && !task.dev_pairs->empty() && task.corpus;
    if (config.early_stopping && !use_dev)
        throw Error("early stopping requires a nonempty dev set and a corpus");
    if (!task.corpus) throw Error("training requires a corpus for passage resolution");

    static const PoolSet kNoPools;
    const PoolSet& pool_ref = pools ? *pools : kNoPools;
    const PassageResolver resolver(*task.corpus, task.extra_passages);

    Rng rng(config.seed);
    AdamOptimizer optimizer(params);

    double best_dev = -1.0;
    int best_epoch = 0;
    EncoderParams best_params;

    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, rng);
        double lf_sum = 0.0, lb_sum = 0.0, l_sum = 0.0;
        std::size_t batches = 0;
        std::vector<TrainingPair> chunk;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
            chunk.clear();
            for (std::size_t i = begin; i < end; ++i) chunk.push_back(pairs[order[i]]);

            const TrainingBatch batch = build_batch(chunk, pool_ref, config, resolver, rng);
            BatchGradients bg = loss_and_gradients(params, batch, config);
            optimizer.step(params, bg.grads, config.learning_rate);
            lf_sum += bg.report.forward_loss;
            lb_sum += bg.report.backward_loss;
            l_sum += bg.report.total;
            ++batches;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.forward_loss = lf_sum / static_cast<double>(batches);
        stats.backward_loss = lb_sum / static_cast<double>(batches);
        stats.total = l_sum / static_cast<double>(batches);
        if (use_dev) {
            stats.dev_recall_at_1 = dev_recall_at_1(params, *task.corpus, *task.dev_pairs, task.threads);
        }
        history.push_back(stats);

        if (config.early_stopping && use_dev) {
            if (*stats.dev_recall_at_1 > best_dev) {
                best_dev = *stats.dev_recall_at_1;
                best_epoch = epoch;
                best_params = params;
            } else if (epoch - best_epoch >= config.patience) {
                break;
            }
        }
    }
    if (config.early_stopping && best_epoch > 0) params = std::move(best_params);
}

}  // namespace

TrainHistory train(EncoderParams& params, const TrainTask& task) {
    TrainHistory history;
    if (task.stage1_pairs && !task.stage1_pairs->empty()) {
        run_stage(params, *task.stage1_pairs, task.stage1_pools, task.stage1_config, task,
                  history.stage1);
    }
    if (task.stage2_pairs && !task.stage2_pairs->empty()) {
        // Optimizer state does not carry over from pre-training.
        run_stage(params, *task.stage2_pairs, task.stage2_pools, task.stage2_config, task,
                  history.stage2);
    }
    return history;
}

}  // namespace hardneg
