#include "hardneg/corpus.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace hardneg {
namespace {

using nlohmann::json;

bool is_space_byte(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Unicode space code points normalized to a plain separator by the splitter.
bool is_space_codepoint_start(std::string_view s, std::size_t i, std::size_t& len) {
    const auto b = [&](std::size_t k) { return static_cast<unsigned char>(s[i + k]); };
    if (i + 1 < s.size() && b(0) == 0xc2 && b(1) == 0xa0) {  // U+00A0
        len = 2;
        return true;
    }
    if (i + 2 < s.size() && b(0) == 0xe2 && b(1) == 0x80) {  // U+2000..200A, U+2028/2029
        const unsigned char b2 = b(2);
        if ((b2 >= 0x80 && b2 <= 0x8a) || b2 == 0xa8 || b2 == 0xa9) {
            len = 3;
            return true;
        }
    }
    if (i + 2 < s.size() && b(0) == 0xe3 && b(1) == 0x80 && b(2) == 0x80) {  // U+3000
        len = 3;
        return true;
    }
    return false;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

void CorpusStore::add(Passage passage) {
    if (by_id_.count(passage.passage_id)) throw DuplicateId(passage.passage_id);
    const std::size_t idx = passages_.size();
    by_id_.emplace(passage.passage_id, idx);
    if (!passage.doc_id.empty()) {
        auto& slots = doc_index_[passage.doc_id];
        // keep the per-document list ordered by position
        auto it = std::upper_bound(slots.begin(), slots.end(), passage.position,
                                   [this](int pos, std::size_t existing) {
                                       return pos < passages_[existing].position;
                                   });
        slots.insert(it, idx);
    }
    passages_.push_back(std::move(passage));
}

bool CorpusStore::contains(const std::string& passage_id) const {
    return by_id_.count(passage_id) > 0;
}

const Passage* CorpusStore::find(const std::string& passage_id) const {
    auto it = by_id_.find(passage_id);
    return it == by_id_.end() ? nullptr : &passages_[it->second];
}

const Passage& CorpusStore::at(const std::string& passage_id) const {
    const Passage* p = find(passage_id);
    if (!p) throw UnresolvedReference(passage_id);
    return *p;
}

std::vector<std::string> CorpusStore::doc_passages(const std::string& doc_id) const {
    std::vector<std::string> ids;
    auto it = doc_index_.find(doc_id);
    if (it == doc_index_.end()) return ids;
    ids.reserve(it->second.size());
    for (std::size_t idx : it->second) ids.push_back(passages_[idx].passage_id);
    return ids;
}

std::vector<std::string> split_words(std::string_view body) {
    std::vector<std::string> words;
    std::string current;
    std::size_t i = 0;
    while (i < body.size()) {
        std::size_t space_len = 0;
        if (is_space_byte(body[i])) {
            space_len = 1;
        } else if (static_cast<unsigned char>(body[i]) >= 0x80 &&
                   is_space_codepoint_start(body, i, space_len)) {
            // space_len set
        }
        if (space_len > 0) {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
            i += space_len;
        } else {
            current.push_back(body[i]);
            ++i;
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::vector<Passage> split_document(const Document& doc, int width) {
    if (width < 1) throw Error("split width must be >= 1");
    const std::vector<std::string> words = split_words(doc.body);
    if (words.empty()) throw EmptyDocument(doc.doc_id);

    std::vector<Passage> passages;
    passages.reserve((words.size() + width - 1) / width);
    for (std::size_t begin = 0; begin < words.size(); begin += width) {
        const std::size_t end = std::min(words.size(), begin + static_cast<std::size_t>(width));
        std::string text;
        for (std::size_t w = begin; w < end; ++w) {
            if (w > begin) text += ' ';
            text += words[w];
        }
        Passage p;
        p.position = static_cast<int>(begin / width);
        p.passage_id = doc.doc_id + "#" + std::to_string(p.position);
        p.doc_id = doc.doc_id;
        p.title = doc.title;
        p.text = std::move(text);
        passages.push_back(std::move(p));
    }
    return passages;
}

CorpusStore load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    std::ifstream in = open_input(path);
    CorpusStore store;
    std::string line;
    std::size_t line_no = 0;
    std::unordered_map<std::string, int> doc_positions;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Passage p;
        if (format == CorpusFormat::tsv) {
            const std::size_t t1 = line.find('\t');
            if (t1 == std::string::npos) throw ParseError(path, line_no, "expected 3 tab-separated columns");
            const std::size_t t2 = line.find('\t', t1 + 1);
            if (t2 == std::string::npos) throw ParseError(path, line_no, "expected 3 tab-separated columns");
            if (line.find('\t', t2 + 1) != std::string::npos)
                throw ParseError(path, line_no, "too many columns");
            p.passage_id = line.substr(0, t1);
            p.text = line.substr(t1 + 1, t2 - t1 - 1);
            p.title = line.substr(t2 + 1);
        } else {
            json row = json::parse(line, nullptr, false);
            if (row.is_discarded() || !row.is_object())
                throw ParseError(path, line_no, "invalid JSON object");
            if (!row.contains("id") || !row.contains("text"))
                throw ParseError(path, line_no, "missing required field 'id' or 'text'");
            try {
                p.passage_id = row.at("id").get<std::string>();
                p.text = row.at("text").get<std::string>();
                p.title = row.value("title", std::string{});
                p.doc_id = row.value("doc_id", std::string{});
                if (row.contains("position")) {
                    p.position = row.at("position").get<int>();
                } else if (!p.doc_id.empty()) {
                    p.position = doc_positions[p.doc_id]++;
                }
            } catch (const json::exception& e) {
                throw ParseError(path, line_no, e.what());
            }
        }
        if (p.passage_id.empty()) throw ParseError(path, line_no, "empty passage id");
        store.add(std::move(p));
    }
    return store;
}

void save_corpus_jsonl(const std::filesystem::path& path, const std::vector<Passage>& passages) {
    std::ofstream out = open_output(path);
    for (const Passage& p : passages) {
        json row;
        row["id"] = p.passage_id;
        row["text"] = p.text;
        row["title"] = p.title;
        if (!p.doc_id.empty()) {
            row["doc_id"] = p.doc_id;
            row["position"] = p.position;
        }
        out << row.dump() << '\n';
    }
}

std::string to_string(SourceStage stage) {
    return stage == SourceStage::synthetic ? "synthetic" : "gold";
}

std::vector<TrainingPair> load_pairs(const std::filesystem::path& path, SourceStage stage,
                                     const CorpusStore& corpus) {
    std::ifstream in = open_input(path);
    std::vector<TrainingPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object())
            throw ParseError(path, line_no, "invalid JSON object");
        if (!row.contains("question") || !row.contains("gold_id"))
            throw ParseError(path, line_no, "missing required field 'question' or 'gold_id'");
        TrainingPair pair;
        try {
            pair.question = row.at("question").get<std::string>();
            pair.gold_passage_id = row.at("gold_id").get<std::string>();
            if (row.contains("answers")) pair.answer_spans = row.at("answers").get<std::vector<std::string>>();
            if (row.contains("stage")) {
                const std::string declared = row.at("stage").get<std::string>();
                if (declared != to_string(stage))
                    throw ParseError(path, line_no,
                                     "row stage '" + declared + "' conflicts with requested stage '" +
                                         to_string(stage) + "'");
            }
        } catch (const json::exception& e) {
            throw ParseError(path, line_no, e.what());
        }
        pair.source_stage = stage;
        if (!corpus.contains(pair.gold_passage_id)) throw UnresolvedReference(pair.gold_passage_id);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

void save_pairs_jsonl(const std::filesystem::path& path, const std::vector<TrainingPair>& pairs) {
    std::ofstream out = open_output(path);
    for (const TrainingPair& pair : pairs) {
        json row;
        row["question"] = pair.question;
        row["gold_id"] = pair.gold_passage_id;
        row["answers"] = pair.answer_spans;
        row["stage"] = to_string(pair.source_stage);
        out << row.dump() << '\n';
    }
}

}  // namespace hardneg
