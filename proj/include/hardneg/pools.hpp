#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hardneg/error.hpp"

namespace hardneg {

enum class Strategy { coarse, fine, bm25, context, mixed };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& name);

/// Stable key for joining pools to questions across runs and files.
std::string question_hash(const std::string& question);

/// Hard-negative candidate pool for one question. The gold passage is never
/// a member and ids are unique; BM25 pools additionally contain no passage
/// with an answer span.
struct NegativePool {
    std::string question_key;  // question_hash(question)
    Strategy strategy = Strategy::coarse;
    std::vector<std::string> passage_ids;   // at most M
    std::vector<Strategy> provenance;       // originating strategy per id
};

using PoolSet = std::map<std::string, NegativePool>;

void save_pools_jsonl(const std::filesystem::path& path, const PoolSet& pools);
PoolSet load_pools_jsonl(const std::filesystem::path& path);

}  // namespace hardneg
