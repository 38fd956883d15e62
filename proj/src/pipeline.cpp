#include "hardneg/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hardneg/dense_index.hpp"
#include "hardneg/eval.hpp"
#include "hardneg/hashing.hpp"
#include "hardneg/mining.hpp"
#include "hardneg/parallel.hpp"
#include "hardneg/sparse_index.hpp"
#include "hardneg/taskgen.hpp"
#include "hardneg/version.hpp"

namespace hardneg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::optional<json> read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
    return doc;
}

/// Content-addressed artifact directory. An artifact is reusable when both
/// the file and its manifest exist and the recorded hash still matches the
/// bytes on disk.
class ArtifactStore {
public:
    ArtifactStore(fs::path dir, std::string config_hash, std::uint64_t seed, int threads)
        : dir_(std::move(dir)), config_hash_(std::move(config_hash)), seed_(seed),
          threads_(threads) {
        fs::create_directories(dir_);
    }

    const fs::path& dir() const { return dir_; }
    int threads() const { return threads_; }
    std::uint64_t seed() const { return seed_; }
    int reused = 0;
    int computed = 0;

    std::string key(const std::string& step, const json& inputs) const {
        json all = inputs;
        all["__step"] = step;
        all["__tool"] = kToolVersion;
        return to_hex(fnv1a64(all.dump()));
    }

    fs::path path_for(const std::string& stem, const std::string& key, const std::string& ext) const {
        return dir_ / (stem + "-" + key + ext);
    }

    bool valid(const fs::path& artifact) const {
        if (!fs::exists(artifact)) return false;
        const auto manifest = read_json_file(manifest_path(artifact));
        if (!manifest) return false;
        const std::string recorded = manifest->value("artifact_hash", "");
        return !recorded.empty() && recorded == to_hex(hash_file(artifact));
    }

    void record(const fs::path& artifact, const std::string& command,
                const std::map<std::string, std::string>& input_hashes, double wall_ms) const {
        RunManifest manifest;
        manifest.command = command;
        manifest.config_hash = config_hash_;
        manifest.input_hashes = input_hashes;
        manifest.seed = seed_;
        manifest.tool_version = kToolVersion;
        manifest.wall_clock_ms = wall_ms;
        manifest.artifact_hash = to_hex(hash_file(artifact));
        std::ofstream out(manifest_path(artifact));
        if (!out) throw IoError("cannot write manifest for '" + artifact.string() + "'");
        out << manifest.to_json().dump(2) << '\n';
    }

    static fs::path manifest_path(const fs::path& artifact) {
        return artifact.string() + ".manifest.json";
    }

private:
    fs::path dir_;
    std::string config_hash_;
    std::uint64_t seed_;
    int threads_;
};

struct LoadedPairs {
    std::vector<TrainingPair> pairs;
    std::string file_hash;
};

LoadedPairs load_pair_file(const fs::path& path, SourceStage stage, const CorpusStore& corpus) {
    LoadedPairs out;
    out.pairs = load_pairs(path, stage, corpus);
    out.file_hash = to_hex(hash_file(path));
    return out;
}

struct CorpusStep {
    CorpusStore corpus;
    std::string corpus_hash;  // hash of the passages file backing the corpus
    fs::path passages_file;
};

CorpusStep prepare_corpus(const PipelineConfig& config, ArtifactStore& store) {
    CorpusStep step;
    if (!config.documents_path.empty()) {
        const std::string docs_hash = to_hex(hash_file(config.documents_path));
        const std::string key =
            store.key("split", {{"documents", docs_hash}, {"width", config.split_width}});
        const fs::path artifact = store.path_for("passages", key, ".jsonl");
        if (store.valid(artifact)) {
            ++store.reused;
        } else {
            const auto start = Clock::now();
            const auto documents = load_documents_jsonl(config.documents_path);
            std::vector<Passage> passages;
            for (const Document& doc : documents) {
                for (auto& p : split_document(doc, config.split_width)) passages.push_back(std::move(p));
            }
            save_corpus_jsonl(artifact, passages);
            store.record(artifact, "split", {{"documents", docs_hash}}, ms_since(start));
            ++store.computed;
        }
        step.passages_file = artifact;
        step.corpus = load_corpus(artifact, CorpusFormat::jsonl);
    } else if (!config.passages_path.empty()) {
        step.passages_file = config.passages_path;
        step.corpus = load_corpus(config.passages_path, config.passages_format == "tsv"
                                                            ? CorpusFormat::tsv
                                                            : CorpusFormat::jsonl);
    } else {
        throw Error("pipeline config must set corpus.documents or corpus.passages");
    }
    step.corpus_hash = to_hex(hash_file(step.passages_file));
    return step;
}

fs::path prepare_sparse_index(const PipelineConfig& config, const CorpusStep& corpus,
                              ArtifactStore& store) {
    const std::string key = store.key("index-sparse", {{"corpus", corpus.corpus_hash},
                                                       {"k1", config.bm25_k1},
                                                       {"b", config.bm25_b}});
    const fs::path artifact = store.path_for("sparse", key, ".json");
    if (store.valid(artifact)) {
        ++store.reused;
        return artifact;
    }
    const auto start = Clock::now();
    const InvertedIndex index =
        InvertedIndex::build(corpus.corpus, Bm25Params{config.bm25_k1, config.bm25_b});
    index.save(artifact);
    store.record(artifact, "index-sparse", {{"corpus", corpus.corpus_hash}}, ms_since(start));
    ++store.computed;
    return artifact;
}

fs::path prepare_miner(const PipelineConfig& config, const CorpusStep& corpus,
                       const LoadedPairs& pairs, int dim, ArtifactStore& store) {
    MinerConfig miner_cfg = config.miner;
    miner_cfg.train.seed = store.seed();
    const std::string key = store.key("miner", {{"corpus", corpus.corpus_hash},
                                                {"pairs", pairs.file_hash},
                                                {"dim", dim},
                                                {"cfg", miner_cfg.train.to_json()},
                                                {"hidden", miner_cfg.hidden_dim}});
    const fs::path artifact = store.path_for("miner-d" + std::to_string(dim), key, ".bin");
    if (store.valid(artifact)) {
        ++store.reused;
        return artifact;
    }
    const auto start = Clock::now();
    const EncoderParams miner =
        train_miner(pairs.pairs, corpus.corpus, dim, miner_cfg, store.threads());
    save_checkpoint(artifact, miner);
    store.record(artifact, "mine",
                 {{"corpus", corpus.corpus_hash}, {"pairs", pairs.file_hash}}, ms_since(start));
    ++store.computed;
    return artifact;
}

struct PoolsStep {
    fs::path pools_file;
    fs::path synth_file;  // empty path when the strategy mints no passages
    std::string pools_hash;
};

PoolsStep materialize_pools(const std::string& strategy_name, const std::string& key,
                            const MiningResult& result, ArtifactStore& store,
                            const std::map<std::string, std::string>& inputs, double wall_ms) {
    PoolsStep step;
    step.pools_file = store.path_for("pools-" + strategy_name, key, ".jsonl");
    save_pools_jsonl(step.pools_file, result.pools);
    store.record(step.pools_file, "mine", inputs, wall_ms);
    if (!result.synthetic_passages.empty()) {
        step.synth_file = store.path_for("pools-" + strategy_name, key, ".synth.jsonl");
        save_corpus_jsonl(step.synth_file, result.synthetic_passages);
        store.record(step.synth_file, "mine", inputs, wall_ms);
    }
    step.pools_hash = to_hex(hash_file(step.pools_file));
    return step;
}

// Mines (or reloads) the pool artifact for one strategy over one pair file.
PoolsStep prepare_pools(const PipelineConfig& config, const CorpusStep& corpus,
                        const LoadedPairs& pairs, const std::string& strategy_name,
                        ArtifactStore& store) {
    json key_inputs = {{"corpus", corpus.corpus_hash},
                       {"pairs", pairs.file_hash},
                       {"strategy", strategy_name},
                       {"M", config.pool_size}};
    std::map<std::string, std::string> manifest_inputs = {{"corpus", corpus.corpus_hash},
                                                          {"pairs", pairs.file_hash}};

    if (strategy_name == "coarse" || strategy_name == "fine") {
        const int dim = strategy_name == "coarse" ? kCoarseMinerDim : kFineMinerDim;
        const fs::path miner_path = prepare_miner(config, corpus, pairs, dim, store);
        const std::string miner_hash = to_hex(hash_file(miner_path));
        key_inputs["miner"] = miner_hash;
        manifest_inputs["miner"] = miner_hash;

        const std::string key = store.key("pools", key_inputs);
        const fs::path pools_file = store.path_for("pools-" + strategy_name, key, ".jsonl");
        if (store.valid(pools_file)) {
            ++store.reused;
            return PoolsStep{pools_file, {}, to_hex(hash_file(pools_file))};
        }
        const auto start = Clock::now();
        const EncoderParams miner = load_checkpoint(miner_path);
        const MiningResult result =
            mine_semantic(pairs.pairs, corpus.corpus, config.pool_size, miner,
                          strategy_from_string(strategy_name), store.threads());
        ++store.computed;
        return materialize_pools(strategy_name, key, result, store, manifest_inputs, ms_since(start));
    }

    if (strategy_name == "bm25") {
        const fs::path index_path = prepare_sparse_index(config, corpus, store);
        const std::string index_hash = to_hex(hash_file(index_path));
        key_inputs["sparse"] = index_hash;
        manifest_inputs["sparse"] = index_hash;

        const std::string key = store.key("pools", key_inputs);
        const fs::path pools_file = store.path_for("pools-bm25", key, ".jsonl");
        if (store.valid(pools_file)) {
            ++store.reused;
            return PoolsStep{pools_file, {}, to_hex(hash_file(pools_file))};
        }
        const auto start = Clock::now();
        const InvertedIndex index = InvertedIndex::load(index_path);
        const MiningResult result = mine_bm25(pairs.pairs, index, corpus.corpus, config.pool_size);
        ++store.computed;
        return materialize_pools("bm25", key, result, store, manifest_inputs, ms_since(start));
    }

    if (strategy_name == "context") {
        const std::string key = store.key("pools", key_inputs);
        const fs::path pools_file = store.path_for("pools-context", key, ".jsonl");
        const fs::path synth_file = store.path_for("pools-context", key, ".synth.jsonl");
        if (store.valid(pools_file)) {
            ++store.reused;
            PoolsStep step{pools_file, {}, to_hex(hash_file(pools_file))};
            if (fs::exists(synth_file) && store.valid(synth_file)) step.synth_file = synth_file;
            return step;
        }
        const auto start = Clock::now();
        const MiningResult result = mine_context(pairs.pairs, corpus.corpus, config.pool_size);
        ++store.computed;
        return materialize_pools("context", key, result, store, manifest_inputs, ms_since(start));
    }

    if (strategy_name == "mixed") {
        // Union of the four strategies; context drops out when the corpus
        // has no document mapping.
        std::vector<PoolsStep> members;
        members.push_back(prepare_pools(config, corpus, pairs, "coarse", store));
        members.push_back(prepare_pools(config, corpus, pairs, "fine", store));
        members.push_back(prepare_pools(config, corpus, pairs, "bm25", store));
        bool with_context = corpus.corpus.has_document_structure();
        if (with_context) {
            members.push_back(prepare_pools(config, corpus, pairs, "context", store));
        }
        json member_hashes = json::array();
        for (const auto& m : members) member_hashes.push_back(m.pools_hash);
        key_inputs["members"] = member_hashes;
        key_inputs["seed"] = store.seed();

        const std::string key = store.key("pools", key_inputs);
        const fs::path pools_file = store.path_for("pools-mixed", key, ".jsonl");
        fs::path synth_carry;
        for (const auto& m : members) {
            if (!m.synth_file.empty()) synth_carry = m.synth_file;
        }
        if (store.valid(pools_file)) {
            ++store.reused;
            return PoolsStep{pools_file, synth_carry, to_hex(hash_file(pools_file))};
        }
        const auto start = Clock::now();
        std::vector<PoolSet> loaded;
        loaded.reserve(members.size());
        for (const auto& m : members) loaded.push_back(load_pools_jsonl(m.pools_file));
        std::vector<const PoolSet*> refs;
        for (const auto& l : loaded) refs.push_back(&l);
        Rng rng(store.seed());
        MiningResult result = mix_pools(refs, config.pool_size, rng);
        ++store.computed;
        PoolsStep step = materialize_pools("mixed", key, result, store,
                                           {{"corpus", corpus.corpus_hash},
                                            {"pairs", pairs.file_hash}},
                                           ms_since(start));
        step.synth_file = synth_carry;
        return step;
    }

    throw Error("unknown mining strategy '" + strategy_name + "'");
}

struct TrainedModel {
    fs::path checkpoint;
    fs::path history_csv;
    std::string checkpoint_hash;
};

CorpusStore load_extra_passages(const std::vector<fs::path>& synth_files) {
    CorpusStore extra;
    for (const auto& path : synth_files) {
        if (path.empty() || !fs::exists(path)) continue;
        const CorpusStore part = load_corpus(path, CorpusFormat::jsonl);
        for (const Passage& p : part.passages()) {
            if (!extra.contains(p.passage_id)) extra.add(p);
        }
    }
    return extra;
}

std::string strip_csv_header(const std::string& csv) {
    const std::size_t nl = csv.find('\n');
    return nl == std::string::npos ? std::string{} : csv.substr(nl + 1);
}

}  // namespace

PipelineConfig PipelineConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error("pipeline config '" + path.string() + "' is not valid JSON");
    return from_json(doc, path.parent_path());
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
    PipelineConfig config;
    const auto resolve = [&base_dir](const std::string& p) -> fs::path {
        if (p.empty()) return {};
        const fs::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    config.name = j.value("name", config.name);
    config.output_dir = resolve(j.value("output_dir", std::string("out")));

    if (j.contains("corpus")) {
        const auto& c = j.at("corpus");
        config.documents_path = resolve(c.value("documents", std::string{}));
        config.passages_path = resolve(c.value("passages", std::string{}));
        config.passages_format = c.value("format", std::string("jsonl"));
        config.split_width = c.value("split_width", config.split_width);
    }
    if (j.contains("pairs")) {
        const auto& p = j.at("pairs");
        config.stage1_pairs_path = resolve(p.value("stage1", std::string{}));
        config.train_pairs_path = resolve(p.value("train", std::string{}));
        config.dev_pairs_path = resolve(p.value("dev", std::string{}));
        config.test_pairs_path = resolve(p.value("test", std::string{}));
    }
    if (j.contains("encoder")) {
        const auto& e = j.at("encoder");
        config.embed_dim = e.value("embed_dim", config.embed_dim);
        config.hidden_dim = e.value("hidden_dim", config.hidden_dim);
        config.max_len.question = e.value("max_question_tokens", config.max_len.question);
        config.max_len.passage = e.value("max_passage_tokens", config.max_len.passage);
        config.encoder_init_seed = e.value("init_seed", config.encoder_init_seed);
    }
    if (j.contains("sparse")) {
        config.bm25_k1 = j.at("sparse").value("k1", config.bm25_k1);
        config.bm25_b = j.at("sparse").value("b", config.bm25_b);
    }
    if (j.contains("mining")) {
        const auto& m = j.at("mining");
        config.pool_size = m.value("pool_size", config.pool_size);
        config.miner.hidden_dim = m.value("miner_hidden_dim", config.miner.hidden_dim);
        if (m.contains("miner_train")) config.miner.train = TrainConfig::from_json(m.at("miner_train"));
    }
    if (j.contains("stage1")) {
        const auto& s = j.at("stage1");
        config.stage1_enabled = s.value("enabled", config.stage1_enabled);
        config.stage1_hard_negatives = s.value("hard_negatives", config.stage1_hard_negatives);
        config.stage1_strategy = s.value("strategy", config.stage1_strategy);
        if (s.contains("train")) config.stage1_train = TrainConfig::from_json(s.at("train"));
    }
    if (j.contains("stage2")) {
        const auto& s = j.at("stage2");
        config.stage2_strategy = s.value("strategy", config.stage2_strategy);
        if (s.contains("train")) config.stage2_train = TrainConfig::from_json(s.at("train"));
    }
    if (j.contains("retrieve")) config.retrieve_k = j.at("retrieve").value("k", config.retrieve_k);
    if (j.contains("eval") && j.at("eval").contains("ks"))
        config.eval_ks = j.at("eval").at("ks").get<std::vector<int>>();
    if (j.contains("ablate")) {
        const auto& a = j.at("ablate");
        if (a.contains("stage1_modes"))
            config.ablate_stage1_modes = a.at("stage1_modes").get<std::vector<std::string>>();
        if (a.contains("strategies"))
            config.ablate_strategies = a.at("strategies").get<std::vector<std::string>>();
    }
    return config;
}

json PipelineConfig::to_json() const {
    return {
        {"name", name},
        {"output_dir", output_dir.string()},
        {"corpus",
         {{"documents", documents_path.string()},
          {"passages", passages_path.string()},
          {"format", passages_format},
          {"split_width", split_width}}},
        {"pairs",
         {{"stage1", stage1_pairs_path.string()},
          {"train", train_pairs_path.string()},
          {"dev", dev_pairs_path.string()},
          {"test", test_pairs_path.string()}}},
        {"encoder",
         {{"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},
          {"max_question_tokens", max_len.question},
          {"max_passage_tokens", max_len.passage},
          {"init_seed", encoder_init_seed}}},
        {"sparse", {{"k1", bm25_k1}, {"b", bm25_b}}},
        {"mining",
         {{"pool_size", pool_size},
          {"miner_hidden_dim", miner.hidden_dim},
          {"miner_train", miner.train.to_json()}}},
        {"stage1",
         {{"enabled", stage1_enabled},
          {"hard_negatives", stage1_hard_negatives},
          {"strategy", stage1_strategy},
          {"train", stage1_train.to_json()}}},
        {"stage2", {{"strategy", stage2_strategy}, {"train", stage2_train.to_json()}}},
        {"retrieve", {{"k", retrieve_k}}},
        {"eval", {{"ks", eval_ks}}},
        {"ablate", {{"stage1_modes", ablate_stage1_modes}, {"strategies", ablate_strategies}}},
    };
}

json RunManifest::to_json() const {
    return {
        {"command", command},
        {"config_hash", config_hash},
        {"inputs", input_hashes},
        {"seed", seed},
        {"tool_version", tool_version},
        {"wall_clock_ms", wall_clock_ms},
        {"artifact_hash", artifact_hash},
    };
}

PipelineResult run_pipeline(const PipelineConfig& config, const PipelineOptions& options) {
    const int threads = options.reproducible ? 1 : std::max(1, options.threads);
    fs::path cache_dir = options.cache_dir;
    if (cache_dir.empty()) {
        if (const char* env = std::getenv("HARDNEG_CACHE")) cache_dir = env;
    }
    if (cache_dir.empty()) cache_dir = config.output_dir;

    PipelineConfig effective = config;
    if (options.seed) {
        effective.encoder_init_seed = *options.seed;
        effective.stage1_train.seed = *options.seed;
        effective.stage2_train.seed = *options.seed;
        effective.miner.train.seed = *options.seed;
    }
    const std::string config_hash = to_hex(fnv1a64(effective.to_json().dump()));
    ArtifactStore store(cache_dir, config_hash, effective.stage2_train.seed, threads);

    // corpus and pair files
    const CorpusStep corpus = prepare_corpus(effective, store);
    if (effective.train_pairs_path.empty()) throw Error("pipeline config must set pairs.train");
    if (effective.test_pairs_path.empty()) throw Error("pipeline config must set pairs.test");
    if (effective.dev_pairs_path.empty()) throw Error("pipeline config must set pairs.dev");
    const LoadedPairs train_pairs =
        load_pair_file(effective.train_pairs_path, SourceStage::gold, corpus.corpus);
    const LoadedPairs dev_pairs =
        load_pair_file(effective.dev_pairs_path, SourceStage::gold, corpus.corpus);
    const LoadedPairs test_pairs =
        load_pair_file(effective.test_pairs_path, SourceStage::gold, corpus.corpus);
    LoadedPairs stage1_pairs;
    const bool stage1_on = effective.stage1_enabled && !effective.stage1_pairs_path.empty();
    if (stage1_on) {
        stage1_pairs =
            load_pair_file(effective.stage1_pairs_path, SourceStage::synthetic, corpus.corpus);
    }

    // negative pools
    std::vector<fs::path> synth_files;
    PoolsStep stage1_pools;
    bool stage1_uses_pools = false;
    if (stage1_on && effective.stage1_hard_negatives && effective.stage1_train.hard_neg_count > 0) {
        std::string strategy = effective.stage1_strategy;
        if (strategy == "context" && !corpus.corpus.has_document_structure()) {
            strategy = "coarse";  // no document mapping for this corpus
        }
        stage1_pools = prepare_pools(effective, corpus, stage1_pairs, strategy, store);
        synth_files.push_back(stage1_pools.synth_file);
        stage1_uses_pools = true;
    }
    PoolsStep stage2_pools;
    const bool stage2_uses_pools =
        effective.stage2_strategy != "rnd" && effective.stage2_train.hard_neg_count > 0;
    if (stage2_uses_pools) {
        stage2_pools = prepare_pools(effective, corpus, train_pairs, effective.stage2_strategy, store);
        synth_files.push_back(stage2_pools.synth_file);
    }

    const json encoder_block = {{"embed_dim", effective.embed_dim},
                                {"hidden_dim", effective.hidden_dim},
                                {"max_q", effective.max_len.question},
                                {"max_p", effective.max_len.passage},
                                {"init_seed", effective.encoder_init_seed}};
    const json vocab_block = {{"stage1", stage1_on ? stage1_pairs.file_hash : ""},
                              {"train", train_pairs.file_hash},
                              {"dev", dev_pairs.file_hash}};

    const auto build_initial_params = [&]() {
        std::vector<const std::vector<TrainingPair>*> pair_sets = {&train_pairs.pairs,
                                                                   &dev_pairs.pairs};
        if (stage1_on) pair_sets.push_back(&stage1_pairs.pairs);
        Vocab vocab = Vocab::build(corpus.corpus, pair_sets);
        return EncoderParams::init(std::move(vocab), effective.embed_dim, effective.hidden_dim,
                                   effective.max_len, effective.encoder_init_seed);
    };

    // stage 1 checkpoint (shared by ablation cells through the cache)
    TrainedModel stage1_model;
    if (stage1_on) {
        TrainConfig cfg = effective.stage1_train;
        if (!effective.stage1_hard_negatives) cfg.hard_neg_count = 0;
        if (!stage1_uses_pools) cfg.hard_neg_count = 0;
        const std::string key = store.key("stage1", {{"corpus", corpus.corpus_hash},
                                                     {"pairs", stage1_pairs.file_hash},
                                                     {"dev", dev_pairs.file_hash},
                                                     {"pools", stage1_uses_pools
                                                                   ? stage1_pools.pools_hash
                                                                   : "none"},
                                                     {"encoder", encoder_block},
                                                     {"vocab", vocab_block},
                                                     {"train", cfg.to_json()}});
        stage1_model.checkpoint = store.path_for("stage1", key, ".bin");
        stage1_model.history_csv = store.path_for("stage1-history", key, ".csv");
        if (store.valid(stage1_model.checkpoint) && fs::exists(stage1_model.history_csv)) {
            ++store.reused;
        } else {
            const auto start = Clock::now();
            EncoderParams params = build_initial_params();
            const CorpusStore extra = load_extra_passages({stage1_uses_pools
                                                               ? stage1_pools.synth_file
                                                               : fs::path{}});
            PoolSet pools;
            if (stage1_uses_pools) pools = load_pools_jsonl(stage1_pools.pools_file);
            TrainTask task;
            task.stage1_pairs = &stage1_pairs.pairs;
            task.stage1_pools = &pools;
            task.stage1_config = cfg;
            task.dev_pairs = &dev_pairs.pairs;
            task.corpus = &corpus.corpus;
            task.extra_passages = &extra;
            task.threads = threads;
            const TrainHistory history = train(params, task);
            save_checkpoint(stage1_model.checkpoint, params);
            std::ofstream hist(stage1_model.history_csv);
            hist << history.to_csv();
            hist.close();
            store.record(stage1_model.checkpoint, "train",
                         {{"corpus", corpus.corpus_hash}, {"pairs", stage1_pairs.file_hash}},
                         ms_since(start));
            store.record(stage1_model.history_csv, "train",
                         {{"corpus", corpus.corpus_hash}, {"pairs", stage1_pairs.file_hash}},
                         ms_since(start));
            ++store.computed;
        }
        stage1_model.checkpoint_hash = to_hex(hash_file(stage1_model.checkpoint));
    }

    // stage 2 checkpoint
    TrainedModel model;
    {
        TrainConfig cfg = effective.stage2_train;
        if (!stage2_uses_pools) cfg.hard_neg_count = 0;
        const std::string key = store.key(
            "model", {{"corpus", corpus.corpus_hash},
                      {"stage1", stage1_on ? stage1_model.checkpoint_hash : "off"},
                      {"pairs", train_pairs.file_hash},
                      {"dev", dev_pairs.file_hash},
                      {"pools", stage2_uses_pools ? stage2_pools.pools_hash : "none"},
                      {"encoder", encoder_block},
                      {"vocab", vocab_block},
                      {"train", cfg.to_json()}});
        model.checkpoint = store.path_for("model", key, ".bin");
        model.history_csv = store.path_for("history", key, ".csv");
        if (store.valid(model.checkpoint) && fs::exists(model.history_csv)) {
            ++store.reused;
        } else {
            const auto start = Clock::now();
            EncoderParams params =
                stage1_on ? load_checkpoint(stage1_model.checkpoint) : build_initial_params();
            const CorpusStore extra = load_extra_passages(synth_files);
            PoolSet pools;
            if (stage2_uses_pools) pools = load_pools_jsonl(stage2_pools.pools_file);
            TrainTask task;
            task.stage2_pairs = &train_pairs.pairs;
            task.stage2_pools = &pools;
            task.stage2_config = cfg;
            task.dev_pairs = &dev_pairs.pairs;
            task.corpus = &corpus.corpus;
            task.extra_passages = &extra;
            task.threads = threads;
            const TrainHistory history = train(params, task);
            save_checkpoint(model.checkpoint, params);

            std::ofstream hist(model.history_csv);
            hist << "stage,epoch,L_f,L_b,L,dev_recall@1\n";
            if (stage1_on) {
                std::ifstream s1(stage1_model.history_csv);
                std::string content((std::istreambuf_iterator<char>(s1)),
                                    std::istreambuf_iterator<char>());
                hist << strip_csv_header(content);
            }
            hist << strip_csv_header(history.to_csv());
            hist.close();

            store.record(model.checkpoint, "train",
                         {{"corpus", corpus.corpus_hash}, {"pairs", train_pairs.file_hash}},
                         ms_since(start));
            store.record(model.history_csv, "train",
                         {{"corpus", corpus.corpus_hash}, {"pairs", train_pairs.file_hash}},
                         ms_since(start));
            ++store.computed;
        }
        model.checkpoint_hash = to_hex(hash_file(model.checkpoint));
    }

    // embed
    const std::string emb_key = store.key(
        "embed", {{"corpus", corpus.corpus_hash}, {"model", model.checkpoint_hash}});
    const fs::path emb_file = store.path_for("emb", emb_key, ".bin");
    if (store.valid(emb_file)) {
        ++store.reused;
    } else {
        const auto start = Clock::now();
        const EncoderParams params = load_checkpoint(model.checkpoint);
        const DenseIndex index = DenseIndex::build(corpus.corpus, params, threads);
        index.save(emb_file);
        store.record(emb_file, "embed",
                     {{"corpus", corpus.corpus_hash}, {"model", model.checkpoint_hash}},
                     ms_since(start));
        ++store.computed;
    }
    const std::string emb_hash = to_hex(hash_file(emb_file));

    // retrieve
    const std::string run_key = store.key("retrieve", {{"emb", emb_hash},
                                                       {"queries", test_pairs.file_hash},
                                                       {"k", effective.retrieve_k}});
    const fs::path run_file = store.path_for("run", run_key, ".trec");
    if (store.valid(run_file)) {
        ++store.reused;
    } else {
        const auto start = Clock::now();
        const EncoderParams params = load_checkpoint(model.checkpoint);
        const DenseIndex index = DenseIndex::load(emb_file);
        std::vector<Embedding> queries(test_pairs.pairs.size());
        std::vector<std::string> failures(test_pairs.pairs.size());
        parallel_for(test_pairs.pairs.size(), threads, [&](std::size_t i) {
            try {
                queries[i] = encode_question(params, tokenize(test_pairs.pairs[i].question));
            } catch (const Error& e) {
                failures[i] = e.what();
            }
        });
        for (std::size_t i = 0; i < failures.size(); ++i) {
            if (!failures[i].empty())
                throw Error("test question " + std::to_string(i) + ": " + failures[i]);
        }
        const auto results = index.search_batch(queries, effective.retrieve_k, threads);
        std::vector<Ranking> rankings;
        rankings.reserve(results.size());
        for (std::size_t i = 0; i < results.size(); ++i) {
            rankings.push_back(Ranking{"t" + std::to_string(i), results[i]});
        }
        write_trec_run(run_file, rankings, effective.name);
        store.record(run_file, "retrieve",
                     {{"emb", emb_hash}, {"queries", test_pairs.file_hash}}, ms_since(start));
        ++store.computed;
    }
    const std::string run_hash = to_hex(hash_file(run_file));

    // eval
    const std::string metrics_key = store.key("eval", {{"run", run_hash},
                                                       {"queries", test_pairs.file_hash},
                                                       {"ks", effective.eval_ks}});
    const fs::path metrics_csv = store.path_for("metrics", metrics_key, ".csv");
    const fs::path metrics_json_path = store.path_for("metrics", metrics_key, ".json");
    std::map<int, double> accuracy;
    if (store.valid(metrics_csv) && fs::exists(metrics_json_path)) {
        ++store.reused;
        const auto doc = read_json_file(metrics_json_path);
        if (!doc) throw Error("unreadable metrics artifact '" + metrics_json_path.string() + "'");
        for (const auto& row : *doc) {
            accuracy[row.at("k").get<int>()] = row.at("value").get<double>();
        }
    } else {
        const auto start = Clock::now();
        const auto rankings = read_trec_run(run_file);
        JudgmentSet judgments;
        for (std::size_t i = 0; i < test_pairs.pairs.size(); ++i) {
            judgments.emplace("t" + std::to_string(i),
                              Judgment::from_spans(test_pairs.pairs[i].answer_spans));
        }
        accuracy = topk_accuracy(rankings, judgments, effective.eval_ks, corpus.corpus);
        MetricRows rows;
        for (const auto& [k, v] : accuracy) rows.emplace_back("top_k_accuracy", k, v);
        write_metrics_csv(metrics_csv, rows);
        write_metrics_json(metrics_json_path, rows);
        store.record(metrics_csv, "eval", {{"run", run_hash}}, ms_since(start));
        store.record(metrics_json_path, "eval", {{"run", run_hash}}, ms_since(start));
        ++store.computed;
    }

    PipelineResult result;
    result.metrics_csv = metrics_csv;
    result.metrics_json = metrics_json_path;
    result.run_file = run_file;
    result.checkpoint = model.checkpoint;
    result.history_csv = model.history_csv;
    result.topk_accuracy = accuracy;
    result.steps_reused = store.reused;
    result.steps_computed = store.computed;
    return result;
}

AblateResult run_ablate(const PipelineConfig& config, const PipelineOptions& options) {
    AblateResult result;
    for (const std::string& mode : config.ablate_stage1_modes) {
        for (const std::string& strategy : config.ablate_strategies) {
            PipelineConfig cell = config;
            cell.stage2_strategy = strategy;
            if (mode == "full") {
                cell.stage1_enabled = true;
                cell.stage1_hard_negatives = true;
            } else if (mode == "no_hard_negatives") {
                cell.stage1_enabled = true;
                cell.stage1_hard_negatives = false;
            } else if (mode == "off") {
                cell.stage1_enabled = false;
            } else {
                throw Error("unknown stage1 mode '" + mode + "'");
            }
            const PipelineResult run = run_pipeline(cell, options);
            result.cells.push_back(AblateCell{mode, strategy, run.topk_accuracy});
        }
    }

    fs::path cache_dir = options.cache_dir;
    if (cache_dir.empty()) {
        if (const char* env = std::getenv("HARDNEG_CACHE")) cache_dir = env;
    }
    if (cache_dir.empty()) cache_dir = config.output_dir;
    fs::create_directories(cache_dir);
    result.csv_path = cache_dir / "ablation.csv";
    std::ofstream out(result.csv_path);
    if (!out) throw IoError("cannot open '" + result.csv_path.string() + "' for writing");
    out << "stage1,strategy";
    for (int k : config.eval_ks) out << ",top" << k;
    out << '\n';
    for (const AblateCell& cell : result.cells) {
        out << cell.stage1_mode << ',' << cell.strategy;
        for (int k : config.eval_ks) {
            out << ',' << format_metric(100.0 * cell.topk_accuracy.at(k));
        }
        out << '\n';
    }
    return result;
}

}  // namespace hardneg
