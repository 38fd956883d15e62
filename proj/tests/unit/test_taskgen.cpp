#include <doctest.h>

#include <set>

#include "hardneg/taskgen.hpp"
#include "hardneg/text.hpp"

using namespace hardneg;

namespace {

TaskGenConfig small_config() {
    TaskGenConfig cfg;
    cfg.n_docs = 40;
    cfg.n_gold_pairs = 60;
    cfg.n_dev_pairs = 10;
    cfg.n_test_pairs = 15;
    cfg.seed = 21;
    return cfg;
}

}  // namespace

TEST_CASE("generated documents split cleanly into aspect passages") {
    const GeneratedTask task = generate_task(small_config());
    REQUIRE(task.documents.size() == 40);
    for (const Document& doc : task.documents) {
        const auto words = split_words(doc.body);
        CHECK(words.size() % 50 == 0);
        const auto passages = split_document(doc, 50);
        CHECK(passages.size() == words.size() / 50);
        CHECK(passages.size() > 1);
        for (const auto& p : passages) CHECK(split_words(p.text).size() == 50);
    }
}

TEST_CASE("every gold pair's passage contains its answer span") {
    const TaskGenConfig cfg = small_config();
    const GeneratedTask task = generate_task(cfg);
    CorpusStore corpus;
    for (const Document& doc : task.documents) {
        for (auto& p : split_document(doc, cfg.passage_words)) corpus.add(std::move(p));
    }
    std::vector<const std::vector<TrainingPair>*> sets = {&task.train_pairs, &task.dev_pairs,
                                                          &task.test_pairs};
    int checked = 0;
    for (const auto* pairs : sets) {
        for (const TrainingPair& pair : *pairs) {
            REQUIRE(!pair.answer_spans.empty());
            CHECK(contains_answer_span(corpus.at(pair.gold_passage_id), pair.answer_spans));
            ++checked;
        }
    }
    CHECK(checked == 60);
}

TEST_CASE("split sizes and stages are respected") {
    const GeneratedTask task = generate_task(small_config());
    CHECK(task.test_pairs.size() == 15);
    CHECK(task.dev_pairs.size() == 10);
    CHECK(task.train_pairs.size() == 35);
    CHECK(task.synthetic_pairs.size() == 40 * 5);
    for (const auto& pair : task.synthetic_pairs) {
        CHECK(pair.source_stage == SourceStage::synthetic);
    }
    for (const auto& pair : task.train_pairs) CHECK(pair.source_stage == SourceStage::gold);

    // questions are unique across the gold splits
    std::set<std::string> questions;
    for (const auto* pairs : {&task.train_pairs, &task.dev_pairs, &task.test_pairs}) {
        for (const auto& pair : *pairs) CHECK(questions.insert(pair.question).second);
    }
}

TEST_CASE("generation is deterministic under the seed") {
    const GeneratedTask a = generate_task(small_config());
    const GeneratedTask b = generate_task(small_config());
    REQUIRE(a.documents.size() == b.documents.size());
    CHECK(a.documents[7].body == b.documents[7].body);
    CHECK(a.train_pairs[3].question == b.train_pairs[3].question);

    TaskGenConfig other = small_config();
    other.seed = 22;
    const GeneratedTask c = generate_task(other);
    CHECK(a.documents[7].body != c.documents[7].body);
}

TEST_CASE("synthetic questions reference every passage and carry no answers") {
    const TaskGenConfig cfg = small_config();
    const GeneratedTask task = generate_task(cfg);
    std::set<std::string> covered;
    for (const auto& pair : task.synthetic_pairs) {
        covered.insert(pair.gold_passage_id);
        CHECK(pair.answer_spans.empty());
    }
    CHECK(covered.size() == 40 * 5);
}
