#include "hardneg/pools.hpp"

#include <fstream>

#include <json.hpp>

#include "hardneg/hashing.hpp"

namespace hardneg {

using nlohmann::json;

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::coarse: return "coarse";
        case Strategy::fine: return "fine";
        case Strategy::bm25: return "bm25";
        case Strategy::context: return "context";
        case Strategy::mixed: return "mixed";
    }
    throw Error("unknown strategy");
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "coarse") return Strategy::coarse;
    if (name == "fine") return Strategy::fine;
    if (name == "bm25") return Strategy::bm25;
    if (name == "context") return Strategy::context;
    if (name == "mixed") return Strategy::mixed;
    throw Error("unknown negative strategy '" + name + "'");
}

std::string question_hash(const std::string& question) {
    return to_hex(fnv1a64(question));
}

void save_pools_jsonl(const std::filesystem::path& path, const PoolSet& pools) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const auto& [key, pool] : pools) {
        json row;
        row["qhash"] = pool.question_key;
        row["strategy"] = to_string(pool.strategy);
        row["ids"] = pool.passage_ids;
        json prov = json::array();
        for (Strategy s : pool.provenance) prov.push_back(to_string(s));
        row["provenance"] = std::move(prov);
        out << row.dump() << '\n';
    }
}

PoolSet load_pools_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    PoolSet pools;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object())
            throw Error(path.string() + ":" + std::to_string(line_no) + ": invalid pool row");
        NegativePool pool;
        pool.question_key = row.at("qhash").get<std::string>();
        pool.strategy = strategy_from_string(row.at("strategy").get<std::string>());
        pool.passage_ids = row.at("ids").get<std::vector<std::string>>();
        for (const auto& p : row.at("provenance")) {
            pool.provenance.push_back(strategy_from_string(p.get<std::string>()));
        }
        if (pool.provenance.size() != pool.passage_ids.size())
            throw Error(path.string() + ":" + std::to_string(line_no) +
                        ": provenance length differs from ids length");
        pools[pool.question_key] = std::move(pool);
    }
    return pools;
}

}  // namespace hardneg
