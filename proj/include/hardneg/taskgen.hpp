#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"

namespace hardneg {

/// Desk-scale retrieval task generator. Documents describe invented
/// subjects, one fixed-width passage per aspect (origin, craft, creature,
/// dish, pastime). Aspect vocabulary is shared across documents and subject
/// names are shared within a document, so ranking the gold passage first
/// requires both the subject and the aspect, not just one of them.
struct TaskGenConfig {
    int n_docs = 420;
    int passage_words = 50;          // every passage is exactly this many words
    int n_gold_pairs = 660;          // split across train/dev/test
    int n_dev_pairs = 90;
    int n_test_pairs = 150;
    int synthetic_per_passage = 1;   // stage-1 style questions
    std::uint64_t seed = 9;
};

struct GeneratedTask {
    std::vector<Document> documents;
    std::vector<TrainingPair> synthetic_pairs;  // stage 1
    std::vector<TrainingPair> train_pairs;      // stage 2
    std::vector<TrainingPair> dev_pairs;
    std::vector<TrainingPair> test_pairs;
};

GeneratedTask generate_task(const TaskGenConfig& config);

/// Writes documents.jsonl, synthetic.jsonl, train.jsonl, dev.jsonl and
/// test.jsonl under `dir` and returns the generated task.
GeneratedTask write_task(const TaskGenConfig& config, const std::filesystem::path& dir);

void save_documents_jsonl(const std::filesystem::path& path, const std::vector<Document>& docs);
std::vector<Document> load_documents_jsonl(const std::filesystem::path& path);

}  // namespace hardneg
