#include "hardneg/mining.hpp"

#include <algorithm>

#include "hardneg/dense_index.hpp"
#include "hardneg/parallel.hpp"

namespace hardneg {
namespace {

// Total occurrences of any answer's token sequence in the token list.
std::size_t answer_occurrences(const std::vector<std::string>& tokens,
                               const std::vector<std::string>& answers) {
    std::size_t count = 0;
    for (const std::string& answer : answers) {
        const TokenStream needle = tokenize(answer);
        if (needle.empty() || needle.size() > tokens.size()) continue;
        for (std::size_t start = 0; start + needle.size() <= tokens.size(); ++start) {
            if (std::equal(needle.tokens.begin(), needle.tokens.end(), tokens.begin() + start)) {
                ++count;
            }
        }
    }
    return count;
}

std::string join_words(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out += ' ';
        out += words[i];
    }
    return out;
}

}  // namespace

EncoderParams train_miner(const std::vector<TrainingPair>& pairs, const CorpusStore& corpus,
                          int embed_dim, const MinerConfig& config, int threads) {
    Vocab vocab = Vocab::build(corpus, {&pairs});
    EncoderParams params = EncoderParams::init(std::move(vocab), embed_dim, config.hidden_dim,
                                               MaxLengths{}, config.train.seed);
    TrainConfig cfg = config.train;
    cfg.hard_neg_count = 0;
    cfg.early_stopping = false;

    TrainTask task;
    task.stage2_pairs = &pairs;
    task.stage2_config = cfg;
    task.corpus = &corpus;
    task.threads = threads;
    train(params, task);
    return params;
}

MiningResult mine_semantic(const std::vector<TrainingPair>& pairs, const CorpusStore& corpus, int M,
                           const EncoderParams& miner, Strategy strategy, int threads) {
    if (M < 1) throw Error("pool size M must be >= 1");
    MiningResult result;
    const DenseIndex index = DenseIndex::build(corpus, miner, threads);
    const int depth = static_cast<int>(std::min<std::size_t>(corpus.size(), static_cast<std::size_t>(M) + 1));

    std::vector<NegativePool> mined(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
        const TrainingPair& pair = pairs[i];
        const Embedding q = encode_question(miner, tokenize(pair.question));
        const auto hits = index.search(q, depth);
        NegativePool pool;
        pool.question_key = question_hash(pair.question);
        pool.strategy = strategy;
        for (const ScoredPassage& hit : hits) {
            if (hit.passage_id == pair.gold_passage_id) continue;
            if (pool.passage_ids.size() >= static_cast<std::size_t>(M)) break;
            pool.passage_ids.push_back(hit.passage_id);
            pool.provenance.push_back(strategy);
        }
        mined[i] = std::move(pool);
    });

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (mined[i].passage_ids.size() < static_cast<std::size_t>(M)) {
            result.warnings.push_back("qhash " + mined[i].question_key + ": pool truncated to " +
                                      std::to_string(mined[i].passage_ids.size()) +
                                      " (corpus smaller than M+1)");
        }
        result.pools[mined[i].question_key] = std::move(mined[i]);
    }
    return result;
}

MiningResult mine_coarse(const std::vector<TrainingPair>& pairs, const CorpusStore& corpus, int M,
                         const MinerConfig& config, int threads) {
    const EncoderParams miner = train_miner(pairs, corpus, kCoarseMinerDim, config, threads);
    return mine_semantic(pairs, corpus, M, miner, Strategy::coarse, threads);
}

MiningResult mine_fine(const std::vector<TrainingPair>& pairs, const CorpusStore& corpus, int M,
                       const MinerConfig& config, int threads) {
    const EncoderParams miner = train_miner(pairs, corpus, kFineMinerDim, config, threads);
    return mine_semantic(pairs, corpus, M, miner, Strategy::fine, threads);
}

MiningResult mine_bm25(const std::vector<TrainingPair>& pairs, const InvertedIndex& index,
                       const CorpusStore& corpus, int M) {
    if (M < 1) throw Error("pool size M must be >= 1");
    MiningResult result;
    for (const TrainingPair& pair : pairs) {
        if (pair.answer_spans.empty()) throw MissingAnswers(pair.question);
        NegativePool pool;
        pool.question_key = question_hash(pair.question);
        pool.strategy = Strategy::bm25;

        const auto hits = index.topk(tokenize(pair.question), 2 * M);
        for (const ScoredPassage& hit : hits) {
            if (pool.passage_ids.size() >= static_cast<std::size_t>(M)) break;
            if (hit.passage_id == pair.gold_passage_id) continue;
            const Passage& passage = corpus.at(hit.passage_id);
            if (contains_answer_span(passage, pair.answer_spans)) continue;
            pool.passage_ids.push_back(hit.passage_id);
            pool.provenance.push_back(Strategy::bm25);
        }
        if (hits.empty()) {
            result.warnings.push_back("qhash " + pool.question_key + ": no BM25 matches, empty pool");
        }
        result.pools[pool.question_key] = std::move(pool);
    }
    return result;
}

MiningResult mine_context(const std::vector<TrainingPair>& pairs, const CorpusStore& corpus, int M) {
    if (M < 1) throw Error("pool size M must be >= 1");
    MiningResult result;
    for (const TrainingPair& pair : pairs) {
        const Passage& gold = corpus.at(pair.gold_passage_id);
        if (gold.doc_id.empty()) throw NoDocumentStructure(gold.passage_id);

        NegativePool pool;
        pool.question_key = question_hash(pair.question);
        pool.strategy = Strategy::context;

        const std::vector<std::string> siblings = corpus.doc_passages(gold.doc_id);
        if (siblings.size() > 1) {
            for (const std::string& id : siblings) {
                if (id == gold.passage_id) continue;
                if (pool.passage_ids.size() >= static_cast<std::size_t>(M)) break;
                pool.passage_ids.push_back(id);
                pool.provenance.push_back(Strategy::context);
            }
        } else {
            // Single-passage document: split the gold passage in half and
            // keep the half that does not carry the answer.
            if (pair.answer_spans.empty()) throw MissingAnswers(pair.question);
            const std::vector<std::string> words = split_words(gold.text);
            if (words.size() < 2) {
                result.warnings.push_back("qhash " + pool.question_key +
                                          ": gold passage too short to split, empty pool");
                result.pools[pool.question_key] = std::move(pool);
                continue;
            }
            const std::size_t mid = (words.size() + 1) / 2;
            Passage halves[2];
            for (int h = 0; h < 2; ++h) {
                halves[h].passage_id = gold.passage_id + "#h" + std::to_string(h);
                halves[h].doc_id = gold.doc_id;
                halves[h].title = gold.title;
                halves[h].position = gold.position;
            }
            halves[0].text = join_words(words, 0, mid);
            halves[1].text = join_words(words, mid, words.size());

            const std::size_t occ0 = answer_occurrences(tokenize(halves[0].text).tokens, pair.answer_spans);
            const std::size_t occ1 = answer_occurrences(tokenize(halves[1].text).tokens, pair.answer_spans);
            int chosen;
            if (occ0 == 0 && occ1 > 0) {
                chosen = 0;
            } else if (occ1 == 0 && occ0 > 0) {
                chosen = 1;
            } else {
                // both contain the answer (fewer occurrences wins, ties ->
                // second half) or neither does (second half).
                chosen = occ0 < occ1 ? 0 : 1;
            }
            pool.passage_ids.push_back(halves[chosen].passage_id);
            pool.provenance.push_back(Strategy::context);
            result.synthetic_passages.push_back(std::move(halves[chosen]));
        }
        result.pools[pool.question_key] = std::move(pool);
    }
    return result;
}

MiningResult mix_pools(const std::vector<const PoolSet*>& pools_by_strategy, int M, Rng& rng) {
    if (M < 1) throw Error("pool size M must be >= 1");
    MiningResult result;

    std::vector<std::string> keys;
    for (const PoolSet* set : pools_by_strategy) {
        if (!set) continue;
        for (const auto& [key, pool] : *set) keys.push_back(key);
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

    for (const std::string& key : keys) {
        NegativePool mixed;
        mixed.question_key = key;
        mixed.strategy = Strategy::mixed;
        std::vector<std::string> seen;
        for (const PoolSet* set : pools_by_strategy) {
            if (!set) continue;
            auto it = set->find(key);
            if (it == set->end()) continue;
            const NegativePool& pool = it->second;
            for (std::size_t i = 0; i < pool.passage_ids.size(); ++i) {
                const std::string& id = pool.passage_ids[i];
                if (std::find(seen.begin(), seen.end(), id) != seen.end()) continue;
                seen.push_back(id);
                mixed.passage_ids.push_back(id);
                mixed.provenance.push_back(pool.provenance.empty() ? pool.strategy : pool.provenance[i]);
            }
        }
        if (mixed.passage_ids.size() > static_cast<std::size_t>(M)) {
            auto picks = sample_without_replacement(mixed.passage_ids.size(),
                                                    static_cast<std::size_t>(M), rng);
            std::sort(picks.begin(), picks.end());
            NegativePool trimmed;
            trimmed.question_key = mixed.question_key;
            trimmed.strategy = Strategy::mixed;
            for (std::size_t idx : picks) {
                trimmed.passage_ids.push_back(mixed.passage_ids[idx]);
                trimmed.provenance.push_back(mixed.provenance[idx]);
            }
            mixed = std::move(trimmed);
        }
        result.pools[key] = std::move(mixed);
    }
    return result;
}

}  // namespace hardneg
