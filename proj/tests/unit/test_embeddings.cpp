#include <doctest.h>

#include <random>
#include <set>

#include "prelude/embeddings.hpp"
#include "prelude/error.hpp"
#include "support.hpp"

using namespace prelude;
namespace pt = prelude::testing;

namespace {

EmbeddingVector vec(std::vector<double> v, std::string provider = "test") { return {std::move(v), provider}; }

PreferenceRecord record(int round, std::vector<double> v, std::string pref, std::string tag = "src") {
    return {vec(std::move(v)), std::move(pref), round, HiddenTag(std::move(tag))};
}

}  // namespace

TEST_SUITE("embeddings-retrieval") {

TEST_CASE("hash embedder is deterministic, lowercases and maps empty text to zero") {
    HashEmbedder e(256);
    CHECK(e.id() == "hash-256");
    auto a = e.embed("The Senate approved the budget");
    CHECK(a.dimension() == 256);
    CHECK(a == e.embed("the senate APPROVED the budget"));
    CHECK(e.embed("").is_zero());
    CHECK(e.embed(" ,.! ").is_zero());
    CHECK(cosine(a, e.embed("")) == 0.0);
    CHECK(cosine(a, a) == doctest::Approx(1.0));
}

TEST_CASE("cosine agrees with a direct computation and rejects dimension mismatch") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> a(16), b(16);
        for (auto& x : a) x = g(rng);
        for (auto& x : b) x = g(rng);
        CHECK(cosine(vec(a), vec(b)) == doctest::Approx(pt::oracle_cosine(a, b)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(cosine(vec({1, 0}), vec({1, 0, 0})), UsageError);
}

TEST_CASE("store appends in round order and rejects drift") {
    PreferenceStore s;
    s.append(record(1, {1, 0}, "a"));
    CHECK_THROWS_AS(s.append(record(3, {0, 1}, "c")), UsageError);
    CHECK_THROWS_AS(s.append(record(2, {0, 1, 0}, "b")), IntegrityError);
    CHECK_THROWS_AS(s.append({vec({0, 1}, "other"), "b", 2, {}}), IntegrityError);
    CHECK_THROWS_AS(s.append(record(2, {std::nan(""), 1}, "b")), IntegrityError);
    s.append(record(2, {0, 1}, "b"));
    CHECK(s.size() == 2);
}

TEST_CASE("retrieval returns the closest records with earlier rounds winning ties") {
    PreferenceStore s;
    s.append(record(1, {1, 0}, "east"));
    s.append(record(2, {0, 1}, "north"));
    s.append(record(3, {2, 0}, "east again"));  // same direction as round 1
    auto top = s.retrieve_top_k(vec({1, 0.1}), 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].round == 1);
    CHECK(top[1].round == 3);
    CHECK(s.retrieve_top_k(vec({1, 0}), 10).size() == 3);
    CHECK(PreferenceStore{}.retrieve_top_k(vec({1, 0}), 5).empty());
    CHECK_THROWS_AS(s.retrieve_top_k(vec({1, 0}), 0), UsageError);
}

TEST_CASE("retrieval matches brute force on random stores") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 30; ++trial) {
        PreferenceStore s;
        std::vector<std::vector<double>> rows;
        auto n = 1 + rng() % 60;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> v(8);
            for (auto& x : v) x = std::round(g(rng) * 2) / 2;  // coarse values force ties
            if (rng() % 5 == 0 && !rows.empty()) v = rows[rng() % rows.size()];
            rows.push_back(v);
            s.append(record(static_cast<int>(i + 1), v, "p" + std::to_string(i + 1)));
        }
        std::vector<double> q(8);
        for (auto& x : q) x = g(rng);
        for (int k : {1, 3, 5}) {
            std::vector<std::size_t> got;
            for (const auto& r : s.retrieve_top_k(vec(q), k)) got.push_back(static_cast<std::size_t>(r.round - 1));
            REQUIRE(got == pt::oracle_top_k(q, rows, k));
        }
    }
}

TEST_CASE("overrides supersede without mutating history") {
    PreferenceStore s;
    s.append(record(1, {1, 0}, "learned one"));
    s.append(record(2, {0, 1}, "learned two"));
    auto v = s.supersede(1, "user text");
    CHECK(v.round == 1);
    CHECK(v.preference == "user text");
    CHECK(v.active);
    CHECK(v.revision == 1);
    CHECK(s.records()[0].preference == "learned one");
    CHECK(s.effective_preference(1) == "user text");
    CHECK(s.retrieve_top_k(vec({1, 0}), 1)[0].preference == "user text");
    s.supersede(1, "second thoughts");

    auto views = s.views();
    int active_round1 = 0;
    for (const auto& view : views) {
        if (view.round == 1 && view.active) {
            ++active_round1;
            CHECK(view.preference == "second thoughts");
        }
    }
    CHECK(active_round1 == 1);
    CHECK(views.size() == 4);
    CHECK(s.size() == 2);
    CHECK_THROWS_AS(s.supersede(9, "x"), NotFoundError);
}

TEST_CASE("snapshot round-trips records, tags and overrides") {
    PreferenceStore s;
    s.append(record(1, {0.1, -0.25}, "p1", "news"));
    s.append(record(2, {1.0 / 3.0, 2}, "p\n2", "reddit"));
    s.supersede(2, "edited");
    auto back = PreferenceStore::from_snapshot(s.snapshot());
    CHECK(back == s);
    CHECK(back.records()[1].source_tag.reveal() == "reddit");
}

}
