#include "hardneg/taskgen.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <json.hpp>

#include "hardneg/rng.hpp"

namespace hardneg {
namespace {

using nlohmann::json;

struct Aspect {
    const char* name;
    std::vector<std::string> keywords;
    std::vector<std::string> gold_templates;       // "{}" is the subject name
    std::vector<std::string> synthetic_templates;  // "{kw}" is an aspect keyword
    std::vector<std::string> values;
};

std::vector<std::string> make_values(const std::vector<std::string>& heads,
                                     const std::vector<std::string>& tails) {
    std::vector<std::string> values;
    for (const auto& h : heads) {
        for (const auto& t : tails) values.push_back(h + " " + t);
    }
    return values;
}

const std::vector<Aspect>& aspects() {
    static const std::vector<Aspect> kAspects = [] {
        std::vector<Aspect> a;
        a.push_back(Aspect{
            "origin",
            {"born", "birthplace", "hometown", "raised", "childhood", "native", "settled", "grew"},
            {"where was {} born", "what hometown raised {}", "which place is the birthplace of {}"},
            {"notes on the {kw} of {}", "{} early record of {kw}", "account of {} and the {kw}"},
            make_values({"port", "lake", "fort", "east", "west"},
                        {"ravik", "selda", "moren", "tavin", "oskra"})});
        a.push_back(Aspect{
            "craft",
            {"craft", "trade", "profession", "workshop", "apprenticed", "practices", "skilled",
             "renowned"},
            {"what craft does {} practice", "which trade is {} known for",
             "what is the profession of {}"},
            {"notes on the {kw} of {}", "{} working record of {kw}", "account of {} and the {kw}"},
            make_values({"copper", "glass", "rope", "tile", "wool"},
                        {"smithing", "turning", "binding", "etching", "weaving"})});
        a.push_back(Aspect{
            "creature",
            {"keeps", "companion", "animal", "tends", "stable", "feeds", "creature", "loyal"},
            {"what creature does {} keep", "which animal does {} tend",
             "what companion lives with {}"},
            {"notes on the {kw} of {}", "{} husbandry record of {kw}", "account of {} and the {kw}"},
            make_values({"ridge", "marsh", "dune", "pine", "cliff"},
                        {"lynx", "heron", "badger", "falcon", "otter"})});
        a.push_back(Aspect{
            "dish",
            {"dish", "meal", "cooks", "recipe", "kitchen", "simmered", "seasoned", "favorite"},
            {"what dish does {} cook best", "which meal does {} prepare often",
             "what favorite recipe belongs to {}"},
            {"notes on the {kw} of {}", "{} kitchen record of {kw}", "account of {} and the {kw}"},
            make_values({"barley", "plum", "nettle", "smoked", "pepper"},
                        {"stew", "dumplings", "flatbread", "porridge", "broth"})});
        a.push_back(Aspect{
            "pastime",
            {"pastime", "hobby", "leisure", "weekends", "collects", "evenings", "devoted", "plays"},
            {"what pastime fills the weekends of {}", "which hobby does {} pursue",
             "what leisure activity does {} enjoy"},
            {"notes on the {kw} of {}", "{} leisure record of {kw}", "account of {} and the {kw}"},
            make_values({"river", "star", "map", "kite", "stone"},
                        {"sketching", "charting", "folding", "carving", "racing"})});
        return a;
    }();
    return kAspects;
}

const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> kFiller = {
        "the",    "a",      "of",     "and",   "with",   "near",    "quiet",  "old",
        "small",  "years",  "time",   "still", "people", "known",   "often",  "long",
        "many",   "early",  "later",  "among", "along",  "beyond",  "within", "humble",
        "steady", "worn",   "bright", "dim",   "local",  "distant", "common", "rare",
        "every",  "season", "market", "road",  "house",  "field",   "corner", "village",
        "stories", "slow",  "warm",   "cold",  "plain",  "narrow",  "wide",   "green"};
    return kFiller;
}

// Small token pools on purpose: every first and last name is shared by many
// subjects, so a question identifies its document only through the pair.
std::vector<std::string> make_names(std::size_t count, Rng& rng) {
    static const std::vector<std::string> kFirstA = {"va", "ta", "mo", "se", "do", "il"};
    static const std::vector<std::string> kFirstB = {"rek", "lin", "ria", "nna", "ric"};
    static const std::vector<std::string> kLastA = {"gro", "mar", "vel", "tor", "has"};
    static const std::vector<std::string> kLastB = {"mund", "dale", "wick", "holt", "berg", "mere"};
    std::set<std::string> seen;
    std::vector<std::string> names;
    while (names.size() < count) {
        const std::string first = kFirstA[uniform_below(rng, kFirstA.size())] +
                                  kFirstB[uniform_below(rng, kFirstB.size())];
        const std::string last = kLastA[uniform_below(rng, kLastA.size())] +
                                 kLastB[uniform_below(rng, kLastB.size())];
        const std::string full = first + " " + last;
        if (seen.insert(full).second) names.push_back(full);
    }
    return names;
}

std::string apply_template(std::string tmpl, const std::string& name, const std::string& keyword) {
    const auto replace = [&tmpl](const std::string& what, const std::string& with) {
        const std::size_t pos = tmpl.find(what);
        if (pos != std::string::npos) tmpl.replace(pos, what.size(), with);
    };
    replace("{kw}", keyword);
    replace("{}", name);
    return tmpl;
}

// Exactly `target_words` words: the subject name twice, a handful of aspect
// keywords, the value once or twice, filler everywhere else. Multi-word
// values stay contiguous so answer spans survive tokenization. Noise that
// mirrors real text: a couple of keywords leak in from other aspects, and
// half the passages mention some other subject once.
std::string make_passage_text(const std::string& name, const std::vector<Aspect>& all_aspects,
                              int aspect_idx, const std::string& value,
                              const std::string& distractor_name, int target_words, Rng& rng) {
    const Aspect& aspect = all_aspects[aspect_idx];
    std::vector<std::vector<std::string>> units;
    const auto push_words = [&units](const std::string& phrase) {
        units.push_back(split_words(phrase));
    };

    push_words(name);
    push_words(name);
    if (uniform_below(rng, 2) == 0) push_words(name);

    std::vector<std::string> kws = aspect.keywords;
    shuffle(kws, rng);
    const std::size_t kw_count = 4 + uniform_below(rng, 2);
    for (std::size_t i = 0; i < kw_count && i < kws.size(); ++i) units.push_back({kws[i]});

    for (int extra = 0; extra < 2; ++extra) {
        const std::size_t other =
            (aspect_idx + 1 + uniform_below(rng, all_aspects.size() - 1)) % all_aspects.size();
        const auto& other_kws = all_aspects[other].keywords;
        units.push_back({other_kws[uniform_below(rng, other_kws.size())]});
    }
    if (!distractor_name.empty() && uniform_below(rng, 2) == 0) push_words(distractor_name);

    push_words(value);
    if (uniform_below(rng, 2) == 0) push_words(value);

    shuffle(units, rng);

    std::size_t content_words = 0;
    for (const auto& u : units) content_words += u.size();
    if (static_cast<int>(content_words) > target_words)
        throw Error("taskgen: passage_words too small for the content units");

    // spread filler between units
    const std::size_t filler_needed = static_cast<std::size_t>(target_words) - content_words;
    const auto& filler = filler_words();
    std::vector<std::string> words;
    words.reserve(static_cast<std::size_t>(target_words));
    const std::size_t slots = units.size() + 1;
    std::vector<std::size_t> fill_per_slot(slots, filler_needed / slots);
    for (std::size_t i = 0; i < filler_needed % slots; ++i) ++fill_per_slot[i];
    for (std::size_t s = 0; s < slots; ++s) {
        for (std::size_t f = 0; f < fill_per_slot[s]; ++f) {
            words.push_back(filler[uniform_below(rng, filler.size())]);
        }
        if (s < units.size()) {
            for (const auto& w : units[s]) words.push_back(w);
        }
    }

    std::string text;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) text += ' ';
        text += words[i];
    }
    return text;
}

std::string title_case(const std::string& name) {
    std::string out = name;
    bool upper = true;
    for (char& c : out) {
        if (c == ' ') {
            upper = true;
        } else if (upper) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            upper = false;
        }
    }
    return out;
}

}  // namespace

GeneratedTask generate_task(const TaskGenConfig& config) {
    if (config.n_dev_pairs + config.n_test_pairs >= config.n_gold_pairs)
        throw Error("taskgen: dev+test must be smaller than n_gold_pairs");
    const auto& kAspects = aspects();
    const int n_aspects = static_cast<int>(kAspects.size());
    if (config.n_gold_pairs > config.n_docs * n_aspects)
        throw Error("taskgen: not enough (doc, aspect) combinations for n_gold_pairs");

    Rng rng(config.seed);
    GeneratedTask task;
    const std::vector<std::string> names = make_names(config.n_docs, rng);

    // doc d, aspect a -> value chosen for that passage
    std::vector<std::vector<std::string>> chosen_values(config.n_docs,
                                                        std::vector<std::string>(n_aspects));
    for (int d = 0; d < config.n_docs; ++d) {
        Document doc;
        doc.doc_id = "d" + std::to_string(d);
        doc.title = title_case(names[d]);
        for (int a = 0; a < n_aspects; ++a) {
            const Aspect& aspect = kAspects[a];
            const std::string& value = aspect.values[uniform_below(rng, aspect.values.size())];
            chosen_values[d][a] = value;
            std::string distractor;
            if (config.n_docs > 1) {
                std::size_t other = uniform_below(rng, static_cast<std::size_t>(config.n_docs - 1));
                if (other >= static_cast<std::size_t>(d)) ++other;
                distractor = names[other];
            }
            if (a > 0) doc.body += ' ';
            doc.body += make_passage_text(names[d], kAspects, a, value, distractor,
                                          config.passage_words, rng);
        }
        task.documents.push_back(std::move(doc));
    }

    // stage-1 style questions, one or more per passage, phrased unlike the
    // gold templates
    for (int d = 0; d < config.n_docs; ++d) {
        for (int a = 0; a < n_aspects; ++a) {
            const Aspect& aspect = kAspects[a];
            for (int s = 0; s < config.synthetic_per_passage; ++s) {
                const std::string& tmpl =
                    aspect.synthetic_templates[uniform_below(rng, aspect.synthetic_templates.size())];
                const std::string& kw = aspect.keywords[uniform_below(rng, aspect.keywords.size())];
                TrainingPair pair;
                pair.question = apply_template(tmpl, names[d], kw);
                if (s > 0) pair.question += " part " + std::to_string(s + 1);
                pair.gold_passage_id = "d" + std::to_string(d) + "#" + std::to_string(a);
                pair.source_stage = SourceStage::synthetic;
                task.synthetic_pairs.push_back(std::move(pair));
            }
        }
    }

    // gold pairs over distinct (doc, aspect) combos
    std::vector<std::size_t> combos(static_cast<std::size_t>(config.n_docs) * n_aspects);
    for (std::size_t i = 0; i < combos.size(); ++i) combos[i] = i;
    shuffle(combos, rng);

    std::vector<TrainingPair> gold;
    std::set<std::string> used_questions;
    for (std::size_t i = 0; i < combos.size() && static_cast<int>(gold.size()) < config.n_gold_pairs;
         ++i) {
        const int d = static_cast<int>(combos[i]) / n_aspects;
        const int a = static_cast<int>(combos[i]) % n_aspects;
        const Aspect& aspect = kAspects[a];
        const std::string& tmpl =
            aspect.gold_templates[uniform_below(rng, aspect.gold_templates.size())];
        TrainingPair pair;
        pair.question = apply_template(tmpl, names[d], "");
        if (!used_questions.insert(pair.question).second) continue;
        pair.gold_passage_id = "d" + std::to_string(d) + "#" + std::to_string(a);
        pair.answer_spans = {chosen_values[d][a]};
        pair.source_stage = SourceStage::gold;
        gold.push_back(std::move(pair));
    }
    if (static_cast<int>(gold.size()) < config.n_gold_pairs)
        throw Error("taskgen: could not generate enough distinct gold questions");

    const int n_test = config.n_test_pairs;
    const int n_dev = config.n_dev_pairs;
    for (int i = 0; i < static_cast<int>(gold.size()); ++i) {
        if (i < n_test) {
            task.test_pairs.push_back(gold[i]);
        } else if (i < n_test + n_dev) {
            task.dev_pairs.push_back(gold[i]);
        } else {
            task.train_pairs.push_back(gold[i]);
        }
    }
    return task;
}

void save_documents_jsonl(const std::filesystem::path& path, const std::vector<Document>& docs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const Document& doc : docs) {
        json row;
        row["id"] = doc.doc_id;
        row["title"] = doc.title;
        row["body"] = doc.body;
        out << row.dump() << '\n';
    }
}

std::vector<Document> load_documents_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object())
            throw ParseError(path, line_no, "invalid JSON object");
        Document doc;
        doc.doc_id = row.at("id").get<std::string>();
        doc.title = row.value("title", std::string{});
        doc.body = row.at("body").get<std::string>();
        docs.push_back(std::move(doc));
    }
    return docs;
}

GeneratedTask write_task(const TaskGenConfig& config, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    GeneratedTask task = generate_task(config);
    save_documents_jsonl(dir / "documents.jsonl", task.documents);
    save_pairs_jsonl(dir / "synthetic.jsonl", task.synthetic_pairs);
    save_pairs_jsonl(dir / "train.jsonl", task.train_pairs);
    save_pairs_jsonl(dir / "dev.jsonl", task.dev_pairs);
    save_pairs_jsonl(dir / "test.jsonl", task.test_pairs);
    return task;
}

}  // namespace hardneg
