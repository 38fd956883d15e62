#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "hardneg/error.hpp"

namespace hardneg {

struct Document {
    std::string doc_id;
    std::string title;
    std::string body;
};

/// Unit of retrieval. Passages split from one document are disjoint, ordered
/// by position, and concatenate (single-space joins) back to the
/// whitespace-normalized body.
struct Passage {
    std::string passage_id;
    std::string doc_id;  // empty when the source format carries no document mapping
    std::string title;
    std::string text;
    int position = 0;
};

enum class SourceStage { synthetic, gold };

struct TrainingPair {
    std::string question;
    std::string gold_passage_id;
    std::vector<std::string> answer_spans;  // may be empty for pre-training pairs
    SourceStage source_stage = SourceStage::gold;
};

class EmptyDocument : public Error {
public:
    explicit EmptyDocument(const std::string& doc_id)
        : Error("document '" + doc_id + "' has an empty body after whitespace normalization") {}
};

class EmptyCorpus : public Error {
public:
    EmptyCorpus() : Error("corpus is empty") {}
};

class ParseError : public Error {
public:
    ParseError(const std::filesystem::path& path, std::size_t line, const std::string& what)
        : Error(path.string() + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DuplicateId : public Error {
public:
    explicit DuplicateId(const std::string& id) : Error("duplicate passage id '" + id + "'"), id_(id) {}
    const std::string& id() const { return id_; }

private:
    std::string id_;
};

class UnresolvedReference : public Error {
public:
    explicit UnresolvedReference(const std::string& id)
        : Error("pair references unknown passage id '" + id + "'"), id_(id) {}
    const std::string& id() const { return id_; }

private:
    std::string id_;
};

/// Id-indexed passage collection plus the document -> ordered-passages map.
/// Immutable once built; safe for unlimited concurrent readers.
class CorpusStore {
public:
    void add(Passage passage);  // throws DuplicateId

    bool contains(const std::string& passage_id) const;
    const Passage* find(const std::string& passage_id) const;
    const Passage& at(const std::string& passage_id) const;  // throws UnresolvedReference

    std::size_t size() const { return passages_.size(); }
    bool empty() const { return passages_.empty(); }
    const std::vector<Passage>& passages() const { return passages_; }

    /// Passage ids of one document, ordered by position. Empty when unknown.
    std::vector<std::string> doc_passages(const std::string& doc_id) const;
    /// True when at least one passage carries a document mapping.
    bool has_document_structure() const { return !doc_index_.empty(); }

private:
    std::vector<Passage> passages_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::vector<std::size_t>> doc_index_;
};

enum class CorpusFormat { tsv, jsonl };

/// Whitespace words of `body`: maximal runs of non-whitespace after Unicode
/// whitespace normalization. This is the "word" used by the splitter (the
/// tokenizer in text.hpp is a different, punctuation-stripping notion).
std::vector<std::string> split_words(std::string_view body);

/// Splits a document into consecutive passages of at most `width` words.
/// All but possibly the last have exactly `width` words; positions count up
/// from 0; the title is copied onto each passage; passage ids are
/// "<doc_id>#<position>".
std::vector<Passage> split_document(const Document& doc, int width = 100);

/// TSV columns are id, text, title. JSONL rows are {"id","text","title"} with
/// optional "doc_id" and "position" (emitted by save_corpus_jsonl, ignored by
/// corpora from other producers).
CorpusStore load_corpus(const std::filesystem::path& path, CorpusFormat format);
void save_corpus_jsonl(const std::filesystem::path& path, const std::vector<Passage>& passages);

/// JSONL rows {"question","gold_id","answers":[...],"stage"}. The `stage`
/// argument tags every pair; a row's own "stage" field, when present, must
/// agree. Order is preserved from the file.
std::vector<TrainingPair> load_pairs(const std::filesystem::path& path, SourceStage stage,
                                     const CorpusStore& corpus);
void save_pairs_jsonl(const std::filesystem::path& path, const std::vector<TrainingPair>& pairs);

std::string to_string(SourceStage stage);

}  // namespace hardneg
