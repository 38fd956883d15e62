#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "hardneg/dense_index.hpp"
#include "hardneg/ensemble.hpp"
#include "hardneg/eval.hpp"
#include "hardneg/mining.hpp"
#include "hardneg/parallel.hpp"
#include "hardneg/pipeline.hpp"
#include "hardneg/sparse_index.hpp"
#include "hardneg/taskgen.hpp"
#include "hardneg/version.hpp"

namespace {

using namespace hardneg;
namespace fs = std::filesystem;

struct GlobalFlags {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
    bool reproducible = false;
};

PipelineOptions options_from(const GlobalFlags& flags) {
    PipelineOptions options;
    if (flags.seed_set) options.seed = flags.seed;
    options.threads = flags.threads;
    options.reproducible = flags.reproducible;
    return options;
}

CorpusStore load_corpus_arg(const std::string& path, const std::string& format) {
    return load_corpus(path, format == "tsv" ? CorpusFormat::tsv : CorpusFormat::jsonl);
}

std::vector<Embedding> encode_questions(const EncoderParams& params,
                                        const std::vector<TrainingPair>& pairs, int threads) {
    std::vector<Embedding> queries(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
        queries[i] = encode_question(params, tokenize(pairs[i].question));
    });
    return queries;
}

std::vector<std::string> split_csv(const std::string& joined) {
    std::vector<std::string> parts;
    std::size_t begin = 0;
    while (begin <= joined.size()) {
        const std::size_t comma = joined.find(',', begin);
        if (comma == std::string::npos) {
            parts.push_back(joined.substr(begin));
            break;
        }
        parts.push_back(joined.substr(begin, comma - begin));
        begin = comma + 1;
    }
    return parts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hardneg: dual-encoder passage retrieval with hard-negative mining"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config, "pipeline config JSON (pipeline/ablate)");
    auto* seed_opt = app.add_option("--seed", flags.seed, "override every stage seed");
    app.add_option("--threads", flags.threads, "worker threads for embedding/search");
    app.add_flag("--reproducible", flags.reproducible,
                 "deterministic single-threaded mode for byte-identical outputs");

    // split
    auto* split = app.add_subcommand("split", "split documents into fixed-width passages");
    std::string split_docs, split_out;
    int split_width = 100;
    split->add_option("--docs", split_docs, "documents JSONL {id,title,body}")->required();
    split->add_option("--width", split_width, "words per passage");
    split->add_option("--out", split_out, "output passages JSONL")->required();

    // index-sparse
    auto* index_sparse = app.add_subcommand("index-sparse", "build the BM25 inverted index");
    std::string is_passages, is_format = "jsonl", is_out;
    double is_k1 = 0.82, is_b = 0.68;
    index_sparse->add_option("--passages", is_passages)->required();
    index_sparse->add_option("--format", is_format, "tsv|jsonl");
    index_sparse->add_option("--k1", is_k1);
    index_sparse->add_option("--b", is_b);
    index_sparse->add_option("--out", is_out)->required();

    // mine
    auto* mine = app.add_subcommand("mine", "mine hard-negative pools for question pairs");
    std::string mine_strategy, mine_pairs, mine_passages, mine_format = "jsonl", mine_index,
                mine_out, mine_synth_out, mine_miner_cfg;
    int mine_m = 100, mine_hidden = 64;
    mine->add_option("--strategy", mine_strategy, "coarse|fine|bm25|context|mixed")->required();
    mine->add_option("--pairs", mine_pairs)->required();
    mine->add_option("--passages", mine_passages)->required();
    mine->add_option("--format", mine_format, "tsv|jsonl");
    mine->add_option("--index", mine_index, "sparse index artifact (bm25/mixed)");
    mine->add_option("--pool-size", mine_m);
    mine->add_option("--miner-config", mine_miner_cfg, "TrainConfig key-value file for miners");
    mine->add_option("--miner-hidden-dim", mine_hidden);
    mine->add_option("--out", mine_out)->required();
    mine->add_option("--synthetic-out", mine_synth_out, "where to write minted context halves");

    // train
    auto* train_cmd = app.add_subcommand("train", "train the dual encoder (one or two stages)");
    std::string tr_cfg, tr_stage1_cfg, tr_pairs, tr_stage1_pairs, tr_dev, tr_passages,
        tr_format = "jsonl", tr_pools, tr_stage1_pools, tr_extra, tr_init, tr_out, tr_history;
    train_cmd->add_option("--train-config", tr_cfg, "TrainConfig key-value file (stage 2)")
        ->required();
    train_cmd->add_option("--stage1-config", tr_stage1_cfg, "TrainConfig key-value file (stage 1)");
    train_cmd->add_option("--pairs", tr_pairs, "gold training pairs JSONL")->required();
    train_cmd->add_option("--stage1-pairs", tr_stage1_pairs, "synthetic pre-training pairs JSONL");
    train_cmd->add_option("--dev", tr_dev, "dev pairs JSONL (early stopping)");
    train_cmd->add_option("--passages", tr_passages)->required();
    train_cmd->add_option("--format", tr_format, "tsv|jsonl");
    train_cmd->add_option("--pools", tr_pools, "stage-2 negative pools JSONL");
    train_cmd->add_option("--stage1-pools", tr_stage1_pools, "stage-1 negative pools JSONL");
    train_cmd->add_option("--extra-passages", tr_extra, "synthetic context halves JSONL");
    train_cmd->add_option("--init", tr_init, "initial checkpoint (resume/fine-tune)");
    train_cmd->add_option("--checkpoint-out", tr_out)->required();
    train_cmd->add_option("--history-out", tr_history, "per-epoch loss/dev metric CSV");
    int tr_embed_dim = 128, tr_hidden_dim = 64;
    train_cmd->add_option("--embed-dim", tr_embed_dim, "embedding dim for fresh init");
    train_cmd->add_option("--hidden-dim", tr_hidden_dim, "hidden dim for fresh init");

    // embed
    auto* embed = app.add_subcommand("embed", "encode every passage into the dense index file");
    std::string em_ckpt, em_passages, em_format = "jsonl", em_out;
    embed->add_option("--checkpoint", em_ckpt)->required();
    embed->add_option("--passages", em_passages)->required();
    embed->add_option("--format", em_format, "tsv|jsonl");
    embed->add_option("--out", em_out)->required();

    // retrieve
    auto* retrieve = app.add_subcommand("retrieve", "dense top-k retrieval to a TREC run file");
    std::string re_ckpt, re_index, re_pairs, re_passages, re_format = "jsonl", re_out,
                re_tag = "hardneg";
    int re_k = 100;
    retrieve->add_option("--checkpoint", re_ckpt)->required();
    retrieve->add_option("--index", re_index, "dense embedding file from `embed`")->required();
    retrieve->add_option("--pairs", re_pairs, "query pairs JSONL")->required();
    retrieve->add_option("--passages", re_passages, "corpus (resolves pair references)")->required();
    retrieve->add_option("--format", re_format, "tsv|jsonl");
    retrieve->add_option("--k", re_k);
    retrieve->add_option("--tag", re_tag);
    retrieve->add_option("--out", re_out)->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "score a TREC run file");
    std::string ev_run, ev_qrels, ev_pairs, ev_passages, ev_format = "jsonl", ev_out, ev_ks =
        "1,5,10,20,100";
    int ev_mrr_k = 10, ev_recall_k = 1000, ev_ndcg_k = 10;
    eval_cmd->add_option("--run", ev_run)->required();
    eval_cmd->add_option("--qrels", ev_qrels, "TREC qrels (graded metrics)");
    eval_cmd->add_option("--pairs", ev_pairs, "pairs JSONL with answers (span metrics)");
    eval_cmd->add_option("--passages", ev_passages, "corpus for span containment");
    eval_cmd->add_option("--format", ev_format, "tsv|jsonl");
    eval_cmd->add_option("--ks", ev_ks, "top-k accuracy cutoffs");
    eval_cmd->add_option("--mrr-k", ev_mrr_k);
    eval_cmd->add_option("--recall-k", ev_recall_k);
    eval_cmd->add_option("--ndcg-k", ev_ndcg_k);
    eval_cmd->add_option("--out", ev_out, "metrics output stem (.csv and .json)")->required();

    // fuse
    auto* fuse = app.add_subcommand("fuse", "combine member models (embedding or rank fusion)");
    std::string fu_mode = "rrf", fu_runs, fu_indexes, fu_ckpts, fu_pairs, fu_coeffs, fu_out,
                fu_spec_out, fu_tag = "fused";
    double fu_rrf_k = 60.0;
    int fu_k = 100;
    fuse->add_option("--mode", fu_mode, "rrf|embedding");
    fuse->add_option("--runs", fu_runs, "comma-separated member TREC runs (rrf)");
    fuse->add_option("--indexes", fu_indexes, "comma-separated member embedding files (embedding)");
    fuse->add_option("--checkpoints", fu_ckpts, "comma-separated member checkpoints (embedding)");
    fuse->add_option("--pairs", fu_pairs, "query pairs JSONL (embedding)");
    fuse->add_option("--coefficients", fu_coeffs, "comma-separated member coefficients");
    fuse->add_option("--rrf-k", fu_rrf_k);
    fuse->add_option("--k", fu_k);
    fuse->add_option("--tag", fu_tag);
    fuse->add_option("--spec-out", fu_spec_out, "persist the fusion spec JSON");
    fuse->add_option("--out", fu_out, "fused TREC run")->required();
    bool fu_tune = false;
    std::string fu_dev, fu_passages, fu_passages_format = "jsonl", fu_grid = "0.5,1.0,1.5";
    fuse->add_flag("--tune", fu_tune, "grid-search coefficients on a dev set (embedding mode)");
    fuse->add_option("--dev", fu_dev, "dev pairs JSONL for tuning");
    fuse->add_option("--passages", fu_passages, "corpus for span-based tuning metric");
    fuse->add_option("--passages-format", fu_passages_format, "tsv|jsonl");
    fuse->add_option("--grid", fu_grid, "comma-separated coefficient grid values");

    // pipeline / ablate
    auto* pipeline_cmd = app.add_subcommand("pipeline", "run the full two-stage pipeline");
    auto* ablate_cmd = app.add_subcommand("ablate", "stage-1 modes x strategies metric grid");

    CLI11_PARSE(app, argc, argv);
    flags.seed_set = seed_opt->count() > 0;

    try {
        if (split->parsed()) {
            const auto documents = load_documents_jsonl(split_docs);
            std::vector<Passage> passages;
            for (const Document& doc : documents) {
                for (auto& p : split_document(doc, split_width)) passages.push_back(std::move(p));
            }
            save_corpus_jsonl(split_out, passages);
            std::cout << "wrote " << passages.size() << " passages to " << split_out << "\n";
        } else if (index_sparse->parsed()) {
            const CorpusStore corpus = load_corpus_arg(is_passages, is_format);
            const InvertedIndex index = InvertedIndex::build(corpus, Bm25Params{is_k1, is_b});
            index.save(is_out);
            std::cout << "indexed " << index.corpus_size() << " passages to " << is_out << "\n";
        } else if (mine->parsed()) {
            const CorpusStore corpus = load_corpus_arg(mine_passages, mine_format);
            const auto pairs = load_pairs(mine_pairs, SourceStage::gold, corpus);
            MinerConfig miner_cfg;
            miner_cfg.hidden_dim = mine_hidden;
            if (!mine_miner_cfg.empty()) miner_cfg.train = TrainConfig::from_kv_file(mine_miner_cfg);
            if (flags.seed_set) miner_cfg.train.seed = flags.seed;

            MiningResult result;
            const Strategy strategy = strategy_from_string(mine_strategy);
            if (strategy == Strategy::coarse) {
                result = mine_coarse(pairs, corpus, mine_m, miner_cfg, flags.threads);
            } else if (strategy == Strategy::fine) {
                result = mine_fine(pairs, corpus, mine_m, miner_cfg, flags.threads);
            } else if (strategy == Strategy::bm25) {
                if (mine_index.empty()) throw Error("--index is required for bm25 mining");
                const InvertedIndex index = InvertedIndex::load(mine_index);
                result = mine_bm25(pairs, index, corpus, mine_m);
            } else if (strategy == Strategy::context) {
                result = mine_context(pairs, corpus, mine_m);
            } else {
                const MiningResult coarse = mine_coarse(pairs, corpus, mine_m, miner_cfg, flags.threads);
                const MiningResult fine = mine_fine(pairs, corpus, mine_m, miner_cfg, flags.threads);
                if (mine_index.empty()) throw Error("--index is required for mixed mining");
                const InvertedIndex index = InvertedIndex::load(mine_index);
                const MiningResult bm = mine_bm25(pairs, index, corpus, mine_m);
                std::vector<const PoolSet*> members = {&coarse.pools, &fine.pools, &bm.pools};
                MiningResult ctx;
                if (corpus.has_document_structure()) {
                    ctx = mine_context(pairs, corpus, mine_m);
                    members.push_back(&ctx.pools);
                }
                Rng rng(flags.seed_set ? flags.seed : miner_cfg.train.seed);
                result = mix_pools(members, mine_m, rng);
                result.synthetic_passages = ctx.synthetic_passages;
            }
            save_pools_jsonl(mine_out, result.pools);
            if (!mine_synth_out.empty()) save_corpus_jsonl(mine_synth_out, result.synthetic_passages);
            for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";
            std::cout << "wrote " << result.pools.size() << " pools to " << mine_out << "\n";
        } else if (train_cmd->parsed()) {
            const CorpusStore corpus = load_corpus_arg(tr_passages, tr_format);
            const auto pairs = load_pairs(tr_pairs, SourceStage::gold, corpus);
            TrainConfig cfg = TrainConfig::from_kv_file(tr_cfg);
            if (flags.seed_set) cfg.seed = flags.seed;

            CorpusStore extra;
            if (!tr_extra.empty()) extra = load_corpus(tr_extra, CorpusFormat::jsonl);

            std::vector<TrainingPair> stage1_pairs, dev_pairs;
            PoolSet stage1_pools, stage2_pools;
            if (!tr_stage1_pairs.empty())
                stage1_pairs = load_pairs(tr_stage1_pairs, SourceStage::synthetic, corpus);
            if (!tr_dev.empty()) dev_pairs = load_pairs(tr_dev, SourceStage::gold, corpus);

            EncoderParams params = [&] {
                if (!tr_init.empty()) return load_checkpoint(tr_init);
                std::vector<const std::vector<TrainingPair>*> sets = {&pairs, &stage1_pairs,
                                                                      &dev_pairs};
                Vocab vocab = Vocab::build(corpus, sets);
                return EncoderParams::init(std::move(vocab), tr_embed_dim, tr_hidden_dim,
                                           MaxLengths{}, cfg.seed);
            }();
            if (!tr_pools.empty()) stage2_pools = load_pools_jsonl(tr_pools);
            if (!tr_stage1_pools.empty()) stage1_pools = load_pools_jsonl(tr_stage1_pools);

            TrainTask task;
            task.corpus = &corpus;
            task.extra_passages = &extra;
            task.threads = flags.threads;
            task.stage2_pairs = &pairs;
            task.stage2_pools = &stage2_pools;
            task.stage2_config = cfg;
            if (!stage1_pairs.empty()) {
                task.stage1_pairs = &stage1_pairs;
                task.stage1_pools = &stage1_pools;
                task.stage1_config =
                    tr_stage1_cfg.empty() ? cfg : TrainConfig::from_kv_file(tr_stage1_cfg);
                if (flags.seed_set) task.stage1_config.seed = flags.seed;
            }
            if (!dev_pairs.empty()) task.dev_pairs = &dev_pairs;

            const TrainHistory history = train(params, task);
            save_checkpoint(tr_out, params);
            if (!tr_history.empty()) {
                std::ofstream out(tr_history);
                out << history.to_csv();
            }
            std::cout << "saved checkpoint " << tr_out << "\n";
        } else if (embed->parsed()) {
            const CorpusStore corpus = load_corpus_arg(em_passages, em_format);
            const EncoderParams params = load_checkpoint(em_ckpt);
            const DenseIndex index = DenseIndex::build(corpus, params, flags.threads);
            index.save(em_out);
            std::cout << "embedded " << index.size() << " passages to " << em_out << "\n";
        } else if (retrieve->parsed()) {
            const CorpusStore corpus = load_corpus_arg(re_passages, re_format);
            const auto pairs = load_pairs(re_pairs, SourceStage::gold, corpus);
            const EncoderParams params = load_checkpoint(re_ckpt);
            const DenseIndex index = DenseIndex::load(re_index);
            const auto queries = encode_questions(params, pairs, flags.threads);
            const auto results = index.search_batch(queries, re_k, flags.threads);
            std::vector<Ranking> rankings;
            for (std::size_t i = 0; i < results.size(); ++i) {
                rankings.push_back(Ranking{"t" + std::to_string(i), results[i]});
            }
            write_trec_run(re_out, rankings, re_tag);
            std::cout << "wrote " << rankings.size() << " rankings to " << re_out << "\n";
        } else if (eval_cmd->parsed()) {
            const auto rankings = read_trec_run(ev_run);
            MetricRows rows;
            if (!ev_qrels.empty()) {
                const JudgmentSet judgments = read_qrels(ev_qrels);
                rows.emplace_back("mrr", ev_mrr_k, mrr_at_k(rankings, judgments, ev_mrr_k));
                rows.emplace_back("recall", ev_recall_k,
                                  recall_at_k(rankings, judgments, ev_recall_k).value);
                rows.emplace_back("ndcg", ev_ndcg_k, ndcg_at_k(rankings, judgments, ev_ndcg_k).value);
            } else if (!ev_pairs.empty()) {
                if (ev_passages.empty())
                    throw Error("span evaluation needs --passages for containment checks");
                const CorpusStore corpus = load_corpus_arg(ev_passages, ev_format);
                const auto pairs = load_pairs(ev_pairs, SourceStage::gold, corpus);
                JudgmentSet judgments;
                for (std::size_t i = 0; i < pairs.size(); ++i) {
                    judgments.emplace("t" + std::to_string(i),
                                      Judgment::from_spans(pairs[i].answer_spans));
                }
                std::vector<int> ks;
                for (const auto& part : split_csv(ev_ks)) ks.push_back(std::stoi(part));
                for (const auto& [k, v] : topk_accuracy(rankings, judgments, ks, corpus)) {
                    rows.emplace_back("top_k_accuracy", k, v);
                }
            } else {
                throw Error("eval needs --qrels or --pairs");
            }
            write_metrics_csv(ev_out + ".csv", rows);
            write_metrics_json(ev_out + ".json", rows);
            for (const auto& [name, k, v] : rows) {
                std::cout << name << "@" << k << " = " << format_metric(v) << "\n";
            }
        } else if (fuse->parsed()) {
            if (fu_mode == "rrf") {
                if (fu_runs.empty()) throw Error("rrf fusion needs --runs");
                const auto run_paths = split_csv(fu_runs);
                std::vector<std::vector<Ranking>> members;
                for (const auto& p : run_paths) members.push_back(read_trec_run(p));
                FusionSpec spec;
                for (std::size_t m = 0; m < members.size(); ++m) {
                    spec.members.push_back("run" + std::to_string(m));
                    spec.coefficients.push_back(1.0);
                }
                spec.rrf_k = fu_rrf_k;

                // fuse per query key
                std::map<std::string, std::vector<Ranking>> by_query;
                for (const auto& member : members) {
                    for (const auto& ranking : member) by_query[ranking.query_key].push_back(ranking);
                }
                std::vector<Ranking> fused;
                for (auto& [key, rankings] : by_query) {
                    Ranking f = rrf_fusion(rankings, spec);
                    truncate_hits(f.hits, static_cast<std::size_t>(fu_k));
                    fused.push_back(std::move(f));
                }
                write_trec_run(fu_out, fused, fu_tag);
                if (!fu_spec_out.empty()) spec.save(fu_spec_out);
                std::cout << "wrote fused run to " << fu_out << "\n";
            } else if (fu_mode == "embedding") {
                if (fu_indexes.empty() || fu_ckpts.empty() || fu_pairs.empty())
                    throw Error("embedding fusion needs --indexes, --checkpoints and --pairs");
                const auto index_paths = split_csv(fu_indexes);
                const auto ckpt_paths = split_csv(fu_ckpts);
                if (index_paths.size() != ckpt_paths.size())
                    throw Error("--indexes and --checkpoints must list the same member count");

                std::vector<DenseIndex> indexes;
                std::vector<EncoderParams> params;
                for (std::size_t m = 0; m < index_paths.size(); ++m) {
                    indexes.push_back(DenseIndex::load(index_paths[m]));
                    params.push_back(load_checkpoint(ckpt_paths[m]));
                }
                const CorpusStore empty_corpus;  // pairs resolve against the first member's ids
                std::vector<TrainingPair> pairs;
                {
                    // queries only; gold ids may not resolve against an id table
                    std::ifstream in(fu_pairs);
                    if (!in) throw IoError("cannot open '" + fu_pairs + "'");
                    std::string line;
                    while (std::getline(in, line)) {
                        if (line.empty()) continue;
                        const auto row = nlohmann::json::parse(line);
                        TrainingPair pair;
                        pair.question = row.at("question").get<std::string>();
                        pairs.push_back(std::move(pair));
                    }
                }

                FusionSpec spec;
                std::vector<double> coeffs;
                for (const auto& c : split_csv(fu_coeffs.empty() ? "" : fu_coeffs)) {
                    if (!c.empty()) coeffs.push_back(std::stod(c));
                }
                for (std::size_t m = 0; m < indexes.size(); ++m) {
                    spec.members.push_back("member" + std::to_string(m));
                    spec.coefficients.push_back(m < coeffs.size() ? coeffs[m] : 1.0);
                }
                spec.rrf_k = fu_rrf_k;
                spec.validate();

                if (fu_tune) {
                    if (fu_dev.empty() || fu_passages.empty())
                        throw Error("--tune needs --dev and --passages");
                    const CorpusStore corpus = load_corpus_arg(fu_passages, fu_passages_format);
                    const auto dev = load_pairs(fu_dev, SourceStage::gold, corpus);
                    std::vector<std::vector<Embedding>> dev_queries(params.size());
                    for (std::size_t m = 0; m < params.size(); ++m) {
                        dev_queries[m] = encode_questions(params[m], dev, flags.threads);
                    }
                    std::vector<std::string> keys;
                    JudgmentSet judgments;
                    for (std::size_t i = 0; i < dev.size(); ++i) {
                        keys.push_back("d" + std::to_string(i));
                        judgments.emplace(keys.back(), Judgment::from_spans(dev[i].answer_spans));
                    }
                    std::vector<double> grid;
                    for (const auto& g : split_csv(fu_grid)) grid.push_back(std::stod(g));
                    std::vector<const DenseIndex*> index_ptrs;
                    for (const auto& idx : indexes) index_ptrs.push_back(&idx);
                    spec = tune_coefficients(spec.members, dev_queries, index_ptrs, keys, judgments,
                                             &corpus, grid, fu_rrf_k);
                    std::cout << "tuned coefficients:";
                    for (double c : spec.coefficients) std::cout << ' ' << c;
                    std::cout << "\n";
                }

                std::vector<const DenseIndex*> index_ptrs;
                for (const auto& idx : indexes) index_ptrs.push_back(&idx);
                const FusedIndex fused_index = build_fused_index(index_ptrs, spec);

                std::vector<Ranking> fused;
                for (std::size_t i = 0; i < pairs.size(); ++i) {
                    std::vector<std::vector<double>> member_vecs;
                    for (const auto& p : params) {
                        member_vecs.push_back(encode_question(p, tokenize(pairs[i].question)).values);
                    }
                    const auto fq = fuse_embedding(member_vecs, spec);
                    fused.push_back(Ranking{"t" + std::to_string(i),
                                            fused_search(fused_index, fq, fu_k)});
                }
                write_trec_run(fu_out, fused, fu_tag);
                if (!fu_spec_out.empty()) spec.save(fu_spec_out);
                std::cout << "wrote fused run to " << fu_out << "\n";
            } else {
                throw Error("unknown fusion mode '" + fu_mode + "'");
            }
        } else if (pipeline_cmd->parsed()) {
            if (flags.config.empty()) throw Error("pipeline needs --config");
            const PipelineConfig config = PipelineConfig::load(flags.config);
            const PipelineResult result = run_pipeline(config, options_from(flags));
            std::cout << "metrics: " << result.metrics_csv << "\n";
            for (const auto& [k, v] : result.topk_accuracy) {
                std::cout << "top" << k << " = " << format_metric(v) << "\n";
            }
            std::cout << "steps computed: " << result.steps_computed
                      << ", reused: " << result.steps_reused << "\n";
        } else if (ablate_cmd->parsed()) {
            if (flags.config.empty()) throw Error("ablate needs --config");
            const PipelineConfig config = PipelineConfig::load(flags.config);
            const AblateResult result = run_ablate(config, options_from(flags));
            std::cout << "wrote " << result.cells.size() << " rows to " << result.csv_path << "\n";
        }
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
