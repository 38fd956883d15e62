#include <iostream>

#include <CLI11.hpp>

#include "hardneg/taskgen.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hardneg-taskgen: generate a desk-scale retrieval task"};
    std::string out_dir = "task";
    hardneg::TaskGenConfig config;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--docs", config.n_docs, "number of documents");
    app.add_option("--passage-words", config.passage_words, "words per passage");
    app.add_option("--gold-pairs", config.n_gold_pairs, "total gold question pairs");
    app.add_option("--dev-pairs", config.n_dev_pairs);
    app.add_option("--test-pairs", config.n_test_pairs);
    app.add_option("--synthetic-per-passage", config.synthetic_per_passage);
    app.add_option("--seed", config.seed);
    CLI11_PARSE(app, argc, argv);

    try {
        const auto task = hardneg::write_task(config, out_dir);
        std::cout << "documents: " << task.documents.size() << "\n"
                  << "synthetic pairs: " << task.synthetic_pairs.size() << "\n"
                  << "train pairs: " << task.train_pairs.size() << "\n"
                  << "dev pairs: " << task.dev_pairs.size() << "\n"
                  << "test pairs: " << task.test_pairs.size() << "\n"
                  << "written to: " << out_dir << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
