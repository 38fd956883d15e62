#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardneg/error.hpp"
#include "hardneg/mining.hpp"
#include "hardneg/trainer.hpp"

namespace hardneg {

/// Declarative pipeline configuration (JSON file). See README for the full
/// schema; training blocks use exactly the TrainConfig keys.
struct PipelineConfig {
    std::string name = "run";
    std::filesystem::path output_dir = "out";

    std::filesystem::path documents_path;  // split into passages when set
    std::filesystem::path passages_path;   // used directly when set
    std::string passages_format = "jsonl";
    int split_width = 100;

    std::filesystem::path stage1_pairs_path;
    std::filesystem::path train_pairs_path;
    std::filesystem::path dev_pairs_path;
    std::filesystem::path test_pairs_path;

    int embed_dim = 128;
    int hidden_dim = 64;
    MaxLengths max_len;
    std::uint64_t encoder_init_seed = 1;

    double bm25_k1 = 0.82;
    double bm25_b = 0.68;

    int pool_size = 100;
    MinerConfig miner;

    bool stage1_enabled = true;
    bool stage1_hard_negatives = true;
    std::string stage1_strategy = "context";  // falls back to coarse without doc structure
    TrainConfig stage1_train;

    std::string stage2_strategy = "rnd";  // rnd|coarse|fine|bm25|context|mixed
    TrainConfig stage2_train;

    int retrieve_k = 100;
    std::vector<int> eval_ks = {1, 5, 10, 20, 100};

    std::vector<std::string> ablate_stage1_modes = {"full", "no_hard_negatives", "off"};
    std::vector<std::string> ablate_strategies = {"rnd", "coarse", "fine", "bm25", "context",
                                                  "mixed"};

    static PipelineConfig load(const std::filesystem::path& path);
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    nlohmann::json to_json() const;
};

struct PipelineOptions {
    std::optional<std::uint64_t> seed;  // overrides both stages' seeds
    int threads = 1;
    bool reproducible = false;          // forces threads = 1
    std::filesystem::path cache_dir;    // defaults to config.output_dir (or $HARDNEG_CACHE)
};

/// Provenance record written next to every produced artifact as
/// <artifact>.manifest.json.
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::map<std::string, std::string> input_hashes;
    std::uint64_t seed = 0;
    std::string tool_version;
    double wall_clock_ms = 0.0;
    std::string artifact_hash;

    nlohmann::json to_json() const;
};

struct PipelineResult {
    std::filesystem::path metrics_csv;
    std::filesystem::path metrics_json;
    std::filesystem::path run_file;
    std::filesystem::path checkpoint;
    std::filesystem::path history_csv;
    std::map<int, double> topk_accuracy;
    int steps_reused = 0;
    int steps_computed = 0;
};

/// Stage 1 -> mining -> Stage 2 -> embed -> retrieve -> eval. Every step is
/// content-addressed by its config and input hashes and resumes from
/// verified on-disk artifacts.
PipelineResult run_pipeline(const PipelineConfig& config, const PipelineOptions& options = {});

struct AblateCell {
    std::string stage1_mode;
    std::string strategy;
    std::map<int, double> topk_accuracy;
};

struct AblateResult {
    std::vector<AblateCell> cells;
    std::filesystem::path csv_path;
};

/// Cross product of stage-1 modes and fine-tuning strategies; one CSV row
/// per cell. Stage 1 checkpoints are shared between cells through the
/// artifact cache.
AblateResult run_ablate(const PipelineConfig& config, const PipelineOptions& options = {});

}  // namespace hardneg
