#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "hardneg/ensemble.hpp"
#include "hardneg/rng.hpp"

using namespace hardneg;

namespace {

std::vector<double> unit_vector(int dim, Rng& rng) {
    std::vector<double> v(dim);
    double sq = 0.0;
    for (double& x : v) {
        x = normal(rng);
        sq += x * x;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
    return v;
}

DenseIndex random_index(std::size_t n, int dim, Rng& rng) {
    std::vector<std::string> ids;
    std::vector<double> matrix;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("p" + std::to_string(i));
        const auto row = unit_vector(dim, rng);
        matrix.insert(matrix.end(), row.begin(), row.end());
    }
    return DenseIndex::from_rows(std::move(ids), std::move(matrix), dim);
}

}  // namespace

TEST_CASE("single member fusion with alpha 1 reproduces member scores") {
    Rng rng(2);
    const DenseIndex member = random_index(50, 8, rng);
    FusionSpec spec;
    spec.members = {"m0"};
    spec.coefficients = {1.0};

    Embedding q;
    q.values = unit_vector(8, rng);
    const auto fused_index = build_fused_index({&member}, spec);
    const auto fused_q = fuse_embedding({q.values}, spec);
    const auto fused_hits = fused_search(fused_index, fused_q, 10);
    const auto member_hits = member.search(q, 10);
    REQUIRE(fused_hits.size() == member_hits.size());
    for (std::size_t i = 0; i < fused_hits.size(); ++i) {
        CHECK(fused_hits[i].passage_id == member_hits[i].passage_id);
        CHECK(fused_hits[i].score == doctest::Approx(member_hits[i].score).epsilon(1e-12));
    }
}

TEST_CASE("single member fusion ranking is alpha-invariant") {
    Rng rng(3);
    const DenseIndex member = random_index(40, 6, rng);
    Embedding q;
    q.values = unit_vector(6, rng);
    const auto member_hits = member.search(q, 40);

    for (double alpha : {0.5, 1.0, 2.5}) {
        FusionSpec spec;
        spec.members = {"m0"};
        spec.coefficients = {alpha};
        const auto fused_index = build_fused_index({&member}, spec);
        const auto fused_hits = fused_search(fused_index, fuse_embedding({q.values}, spec), 40);
        REQUIRE(fused_hits.size() == member_hits.size());
        for (std::size_t i = 0; i < fused_hits.size(); ++i) {
            CHECK(fused_hits[i].passage_id == member_hits[i].passage_id);
        }
    }
}

TEST_CASE("two members with unit weights add their scores") {
    FusionSpec spec;
    spec.members = {"m0", "m1"};
    spec.coefficients = {1.0, 1.0};
    // member dots: 0.5 and 0.2 -> fused 0.7
    const std::vector<double> q0 = {1.0, 0.0}, p0 = {0.5, std::sqrt(1 - 0.25)};
    const std::vector<double> q1 = {0.0, 1.0}, p1 = {std::sqrt(1 - 0.04), 0.2};
    const auto fq = fuse_embedding({q0, q1}, spec);
    const auto fp = fuse_embedding({p0, p1}, spec);
    double dot = 0.0;
    for (std::size_t i = 0; i < fq.size(); ++i) dot += fq[i] * fp[i];
    CHECK(dot == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("fused dot equals the coefficient-squared sum of member dots") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const int members = 2 + static_cast<int>(uniform_below(rng, 3));
        FusionSpec spec;
        std::vector<std::vector<double>> qs, ps;
        for (int m = 0; m < members; ++m) {
            spec.members.push_back("m" + std::to_string(m));
            spec.coefficients.push_back(0.25 + uniform_real(rng) * 2.0);
            const int dim = 3 + static_cast<int>(uniform_below(rng, 6));
            qs.push_back(unit_vector(dim, rng));
            ps.push_back(unit_vector(dim, rng));
        }
        const auto fq = fuse_embedding(qs, spec);
        const auto fp = fuse_embedding(ps, spec);
        double fused_dot = 0.0;
        for (std::size_t i = 0; i < fq.size(); ++i) fused_dot += fq[i] * fp[i];

        double expected = 0.0;
        for (int m = 0; m < members; ++m) {
            double s = 0.0;
            for (std::size_t i = 0; i < qs[m].size(); ++i) s += qs[m][i] * ps[m][i];
            expected += spec.coefficients[m] * spec.coefficients[m] * s;
        }
        CHECK(fused_dot == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("member count mismatches raise SpecMismatch") {
    FusionSpec spec;
    spec.members = {"a", "b"};
    spec.coefficients = {1.0, 1.0};
    CHECK_THROWS_AS(fuse_embedding({{1.0}}, spec), SpecMismatch);
    FusionSpec bad;
    bad.members = {"a"};
    bad.coefficients = {1.0, 2.0};
    CHECK_THROWS_AS(bad.validate(), SpecMismatch);
    FusionSpec nonpos;
    nonpos.members = {"a"};
    nonpos.coefficients = {0.0};
    CHECK_THROWS_AS(nonpos.validate(), SpecMismatch);
}

TEST_CASE("rrf of identical member rankings preserves the order") {
    Ranking member;
    member.query_key = "q";
    member.hits = {{"a", 9.0}, {"b", 5.0}, {"c", 1.0}};
    FusionSpec spec;
    spec.members = {"m0", "m1"};
    spec.coefficients = {1.0, 1.0};
    const Ranking fused = rrf_fusion({member, member}, spec);
    REQUIRE(fused.hits.size() == 3);
    CHECK(fused.hits[0].passage_id == "a");
    CHECK(fused.hits[1].passage_id == "b");
    CHECK(fused.hits[2].passage_id == "c");
}

TEST_CASE("rrf score for ranks 1 and 2 at k=60 is exactly 1/61 + 1/62") {
    Ranking a, b;
    a.query_key = b.query_key = "q";
    a.hits = {{"doc", 3.0}, {"other", 2.0}};
    b.hits = {{"other", 9.0}, {"doc", 8.0}};
    FusionSpec spec;
    spec.members = {"a", "b"};
    spec.coefficients = {1.0, 1.0};
    spec.rrf_k = 60.0;
    const Ranking fused = rrf_fusion({a, b}, spec);
    double doc_score = 0.0;
    for (const auto& hit : fused.hits) {
        if (hit.passage_id == "doc") doc_score = hit.score;
    }
    CHECK(doc_score == 1.0 / (60.0 + 1.0) + 1.0 / (60.0 + 2.0));  // exact
}

TEST_CASE("a document present in one member still scores its single term") {
    Ranking a, b;
    a.query_key = b.query_key = "q";
    a.hits = {{"both", 2.0}, {"only_a", 1.0}};
    b.hits = {{"both", 2.0}};
    FusionSpec spec;
    spec.members = {"a", "b"};
    spec.coefficients = {1.0, 1.0};
    const Ranking fused = rrf_fusion({a, b}, spec);
    double only_a = -1.0;
    for (const auto& hit : fused.hits) {
        if (hit.passage_id == "only_a") only_a = hit.score;
    }
    CHECK(only_a == 1.0 / 62.0);
}

TEST_CASE("rrf is invariant under strictly monotone member re-scoring") {
    Rng rng(8);
    Ranking a, b;
    a.query_key = b.query_key = "q";
    for (int i = 0; i < 10; ++i) {
        a.hits.push_back({"d" + std::to_string(i), 10.0 - i});
    }
    b = a;
    std::reverse(b.hits.begin(), b.hits.end());
    for (std::size_t i = 0; i < b.hits.size(); ++i) b.hits[i].score = 10.0 - static_cast<double>(i);

    FusionSpec spec;
    spec.members = {"a", "b"};
    spec.coefficients = {1.0, 1.0};
    const Ranking base = rrf_fusion({a, b}, spec);

    // monotone transform of the scores, ranks unchanged
    Ranking a2 = a, b2 = b;
    for (auto& hit : a2.hits) hit.score = std::exp(hit.score) + 3.0;
    for (auto& hit : b2.hits) hit.score = hit.score * 100.0;
    const Ranking transformed = rrf_fusion({a2, b2}, spec);
    REQUIRE(base.hits.size() == transformed.hits.size());
    for (std::size_t i = 0; i < base.hits.size(); ++i) {
        CHECK(base.hits[i].passage_id == transformed.hits[i].passage_id);
        CHECK(base.hits[i].score == transformed.hits[i].score);
    }
}

TEST_CASE("fusion spec json round-trip") {
    namespace fs = std::filesystem;
    FusionSpec spec;
    spec.members = {"coarse", "bm25"};
    spec.coefficients = {1.5, 0.5};
    spec.rrf_k = 60.0;
    const fs::path path = fs::temp_directory_path() / "hn_fusion.json";
    spec.save(path);
    const FusionSpec loaded = FusionSpec::load(path);
    CHECK(loaded.members == spec.members);
    CHECK(loaded.coefficients == spec.coefficients);
    CHECK(loaded.rrf_k == spec.rrf_k);
}

TEST_CASE("tuning a singleton grid returns the uniform spec") {
    Rng rng(9);
    const DenseIndex index = random_index(20, 4, rng);
    std::vector<Embedding> queries(3);
    std::vector<std::string> keys;
    JudgmentSet judgments;
    for (int q = 0; q < 3; ++q) {
        queries[q].values = unit_vector(4, rng);
        keys.push_back("q" + std::to_string(q));
        judgments.emplace(keys.back(), Judgment::from_qrels({{"p0", 1}}));
    }
    const FusionSpec spec = tune_coefficients({"m0", "m1"}, {queries, queries}, {&index, &index},
                                              keys, judgments, nullptr, {1.0});
    CHECK(spec.coefficients == std::vector<double>{1.0, 1.0});
}

TEST_CASE("duplicated members tie toward uniform coefficients") {
    Rng rng(10);
    const DenseIndex index = random_index(15, 4, rng);
    std::vector<Embedding> queries(2);
    std::vector<std::string> keys = {"q0", "q1"};
    JudgmentSet judgments;
    queries[0].values = unit_vector(4, rng);
    queries[1].values = unit_vector(4, rng);
    judgments.emplace("q0", Judgment::from_qrels({{"p1", 1}}));
    judgments.emplace("q1", Judgment::from_qrels({{"p2", 1}}));

    const FusionSpec spec = tune_coefficients({"m0", "m1"}, {queries, queries}, {&index, &index},
                                              keys, judgments, nullptr, {0.5, 1.0, 1.5});
    // identical members: every split scores the same, uniform wins the tie
    CHECK(spec.coefficients[0] == spec.coefficients[1]);
}

TEST_CASE("tuning suppresses a strictly worse member") {
    // member A ranks the gold first; member B ranks garbage first. The junk
    // id sorts before the gold id so score ties cannot mask member B's harm.
    const int dim = 2;
    std::vector<std::string> ids = {"gold", "aa_junk"};
    const DenseIndex good = DenseIndex::from_rows(ids, {1.0, 0.0, 0.0, 1.0}, dim);
    const DenseIndex bad = DenseIndex::from_rows(ids, {0.0, 1.0, 1.0, 0.0}, dim);

    std::vector<Embedding> queries(1);
    queries[0].values = {1.0, 0.0};
    JudgmentSet judgments;
    judgments.emplace("q0", Judgment::from_qrels({{"gold", 1}}));

    const FusionSpec spec =
        tune_coefficients({"good", "bad"}, {queries, queries}, {&good, &bad}, {"q0"}, judgments,
                          nullptr, {0.5, 1.5});
    CHECK(spec.coefficients[0] == 1.5);
    CHECK(spec.coefficients[1] == 0.5);
}

TEST_CASE("empty grid raises EmptyGrid") {
    CHECK_THROWS_AS(tune_coefficients({"m"}, {{}}, {nullptr}, {}, {}, nullptr, {}), EmptyGrid);
}
