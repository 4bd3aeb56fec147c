#include "lakejoin/retrieval.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lakejoin/common.hpp"
#include "test_helpers.hpp"

using namespace lakejoin;
using namespace lakejoin::testing;
namespace fs = std::filesystem;

namespace {

std::unordered_set<std::string> to_set(const std::vector<std::string>& v) {
    return {v.begin(), v.end()};
}

// Lake with one candidate per requested containment against a 10-key query.
struct PlantedLake {
    Table base;
    LakeCatalog catalog;
    std::vector<std::string> keys;
};

PlantedLake planted_lake(const std::vector<double>& containments) {
    std::vector<std::string> keys;
    for (int i = 0; i < 10; ++i) keys.push_back(key_name(i));
    std::vector<Table> tables;
    for (std::size_t c = 0; c < containments.size(); ++c) {
        const int overlap = static_cast<int>(containments[c] * 10.0 + 0.5);
        std::vector<std::string> vals;
        for (int i = 0; i < overlap; ++i) vals.push_back(keys[i]);
        for (int i = overlap; i < 10; ++i) vals.push_back(key_name(1000 + 100 * c + i));
        tables.push_back(key_table("cand" + std::to_string(c), "k", vals));
    }
    PlantedLake p{key_table("base", "k", keys), make_catalog(std::move(tables)), keys};
    return p;
}

}  // namespace

TEST_CASE("containment basics") {
    const auto q = to_set({"a", "b", "c", "d"});
    CHECK(containment(q, q) == 1.0);
    CHECK(containment(q, to_set({"x", "y"})) == 0.0);
    // Set-intersection enumeration oracle: {a,b,c,d} vs {b,c,x} -> 2/4.
    CHECK(containment(q, to_set({"b", "c", "x"})) == 0.5);
    CHECK_THROWS_AS(containment({}, q), DataError);
}

TEST_CASE("containment is monotone and bounded") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        auto q = to_set(random_keys(rng, 1 + rng.below(50), 256));
        auto small = random_keys(rng, rng.below(40), 256);
        auto big = small;
        for (auto& k : random_keys(rng, 1 + rng.below(20), 256)) big.push_back(k);
        const double c_small = containment(q, to_set(small));
        const double c_big = containment(q, to_set(big));
        CHECK(c_small >= 0.0);
        CHECK(c_big <= 1.0);
        CHECK(c_small <= c_big);
    }
}

TEST_CASE("exact_match ranks a planted lake correctly") {
    PlantedLake p = planted_lake({1.0, 0.6, 0.3});
    QuerySpec q;
    q.base_table = &p.base;
    q.query_column = "k";
    q.top_k = 2;

    auto result = exact_match(q, p.catalog);
    REQUIRE(result.size() == 2);
    CHECK(result[0].table_name == "cand0");
    CHECK(*result[0].score == doctest::Approx(1.0));
    CHECK(result[0].rank == 1);
    CHECK(result[1].table_name == "cand1");
    CHECK(*result[1].score == doctest::Approx(0.6));
    CHECK(result[1].rank == 2);
}

TEST_CASE("exact_match excludes zero scores and identity dominates") {
    PlantedLake p = planted_lake({1.0, 0.0});
    QuerySpec q;
    q.base_table = &p.base;
    q.query_column = "k";
    auto result = exact_match(q, p.catalog);
    REQUIRE(result.size() == 1);
    CHECK(result[0].table_name == "cand0");

    PlantedLake disjoint = planted_lake({0.0, 0.0});
    q.base_table = &disjoint.base;
    CHECK(exact_match(q, disjoint.catalog).empty());
}

TEST_CASE("exact_match equals brute-force ranking on random lakes") {
    Rng rng(37);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n_tables = 1 + rng.below(12);
        std::vector<Table> tables;
        std::vector<std::pair<std::string, std::vector<std::string>>> raw;
        for (std::size_t t = 0; t < n_tables; ++t) {
            auto vals = random_keys(rng, 1 + rng.below(60), 128);
            const std::string name = "t" + std::to_string(t);
            raw.emplace_back(name, vals);
            tables.push_back(key_table(name, "c", vals));
        }
        auto qkeys = random_keys(rng, 1 + rng.below(40), 128);
        Table base = key_table("base", "q", qkeys);
        QuerySpec q;
        q.base_table = &base;
        q.query_column = "q";
        q.top_k = 5;
        auto got = exact_match(q, make_catalog(std::move(tables)));

        // Oracle: brute-force score every table, sort, truncate.
        std::vector<std::pair<double, std::string>> expect;
        for (const auto& [name, vals] : raw) {
            const double score = brute_containment(qkeys, vals);
            if (score > 0.0) expect.emplace_back(score, name);
        }
        std::sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        if (expect.size() > 5) expect.resize(5);
        REQUIRE(got.size() == expect.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].table_name == expect[i].second);
            CHECK(*got[i].score == doctest::Approx(expect[i].first));
        }
    }
}

TEST_CASE("seeded-random tie break is deterministic per seed") {
    std::vector<Table> tables;
    for (int t = 0; t < 6; ++t) {
        tables.push_back(key_table("t" + std::to_string(t), "c", {key_name(0)}));
    }
    Table base = key_table("base", "q", {key_name(0)});
    QuerySpec q;
    q.base_table = &base;
    q.query_column = "q";
    q.top_k = 3;
    q.tie_break = TieBreak::SeededRandom;
    q.tie_seed = 9;
    auto cat = make_catalog(std::move(tables));
    auto r1 = exact_match(q, cat);
    auto r2 = exact_match(q, cat);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i].table_name == r2[i].table_name);

    q.tie_seed = 10;
    auto r3 = exact_match(q, cat);
    bool any_diff = false;
    for (std::size_t i = 0; i < r1.size(); ++i) any_diff |= r1[i].table_name != r3[i].table_name;
    CHECK(any_diff);  // different seed reshuffles the tie group
}

TEST_CASE("lsh index: empty catalog yields a valid empty index") {
    LshEnsembleIndex index = build_lsh_index(make_catalog({}));
    CHECK(index.empty());
    Table base = key_table("base", "q", {"a"});
    QuerySpec q;
    q.base_table = &base;
    q.query_column = "q";
    q.method = RetrievalMethod::MinHash;
    CHECK(minhash_query(index, q).empty());
}

TEST_CASE("lsh index persistence is byte identical and version guarded") {
    Rng rng(41);
    std::vector<Table> tables;
    for (int t = 0; t < 8; ++t) {
        tables.push_back(key_table("t" + std::to_string(t), "c",
                                   random_keys(rng, 20 + rng.below(200), 1 << 12)));
    }
    auto cat = make_catalog(std::move(tables));
    LshEnsembleIndex i1 = build_lsh_index(cat, 0.2, 64, 4, 5);
    LshEnsembleIndex i2 = build_lsh_index(cat, 0.2, 64, 4, 5);

    const fs::path dir = fs::temp_directory_path() / "lakejoin_test_index";
    fs::create_directories(dir);
    save_index(i1, dir / "a.idx");
    save_index(i2, dir / "b.idx");
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(slurp(dir / "a.idx") == slurp(dir / "b.idx"));

    LshEnsembleIndex loaded = load_index(dir / "a.idx");
    save_index(loaded, dir / "c.idx");
    CHECK(slurp(dir / "a.idx") == slurp(dir / "c.idx"));

    // Flip the version field (offset 4, after magic).
    std::string bytes = slurp(dir / "a.idx");
    bytes[4] = 99;
    std::ofstream(dir / "bad.idx", std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_index(dir / "bad.idx"), DataError);
    fs::remove_all(dir);
}

TEST_CASE("minhash retrieves exact duplicates and drops disjoint columns") {
    Rng rng(43);
    int dup_hits = 0;
    int disjoint_hits = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        auto qkeys = random_keys(rng, 50 + rng.below(200), 1 << 14);
        std::vector<std::string> other = random_keys(rng, 50 + rng.below(200), 1 << 14);
        // Force the disjoint candidate into a distinct key universe.
        for (auto& k : other) k = "z" + k;
        std::vector<Table> tables;
        tables.push_back(key_table("dup", "c", qkeys));
        tables.push_back(key_table("far", "c", other));
        auto cat = make_catalog(std::move(tables));
        LshEnsembleIndex index = build_lsh_index(cat, 0.2, 128, 4, rng.next());

        Table base = key_table("base", "q", qkeys);
        QuerySpec q;
        q.base_table = &base;
        q.query_column = "q";
        q.method = RetrievalMethod::MinHash;
        auto result = minhash_query(index, q);
        for (const auto& c : result) {
            if (c.table_name == "dup") ++dup_hits;
            if (c.table_name == "far") ++disjoint_hits;
            CHECK_FALSE(c.score.has_value());  // unranked contract
        }
    }
    CHECK(dup_hits >= 99);
    CHECK(disjoint_hits <= 1);
}

TEST_CASE("minhash truncates to top_k in index insertion order") {
    std::vector<std::string> keys;
    for (int i = 0; i < 40; ++i) keys.push_back(key_name(i));
    std::vector<Table> tables;
    for (int t = 0; t < 9; ++t) {
        tables.push_back(key_table("t" + std::to_string(t), "c", keys));
    }
    auto cat = make_catalog(std::move(tables));
    LshEnsembleIndex index = build_lsh_index(cat, 0.2, 64, 2, 1);
    Table base = key_table("base", "q", keys);
    QuerySpec q;
    q.base_table = &base;
    q.query_column = "q";
    q.method = RetrievalMethod::MinHash;
    q.top_k = 4;
    auto result = minhash_query(index, q);
    REQUIRE(result.size() == 4);
    // Insertion order is sorted (table, column) order.
    CHECK(result[0].table_name == "t0");
    CHECK(result[3].table_name == "t3");
}

TEST_CASE("minhash rejects threshold below the build threshold and foreign sketches") {
    auto cat = make_catalog({key_table("t", "c", {"a", "b"})});
    LshEnsembleIndex index = build_lsh_index(cat, 0.3, 64, 2, 1);
    Table base = key_table("base", "q", {"a", "b"});
    QuerySpec q;
    q.base_table = &base;
    q.query_column = "q";
    q.method = RetrievalMethod::MinHash;
    q.threshold = 0.2;
    CHECK_THROWS_AS(minhash_query(index, q), DataError);

    q.threshold = 0.3;
    MinHashSketch wrong_seed = sketch_keys({"a", "b"}, index.seed() + 1, index.num_perm());
    CHECK_THROWS_AS(minhash_query(index, q, wrong_seed), DataError);
    MinHashSketch wrong_perm = sketch_keys({"a", "b"}, index.seed(), 32);
    CHECK_THROWS_AS(minhash_query(index, q, wrong_perm), DataError);
    MinHashSketch ok = sketch_keys({"a", "b"}, index.seed(), index.num_perm());
    CHECK(minhash_query(index, q, ok).size() == 1);
}

TEST_CASE("hybrid is a ranked subset of the minhash pool with exact scores") {
    PlantedLake p = planted_lake({1.0, 0.6, 0.3, 0.0});
    LshEnsembleIndex index = build_lsh_index(p.catalog, 0.2, 256, 4, 7);
    QuerySpec q;
    q.base_table = &p.base;
    q.query_column = "k";
    q.threshold = 0.2;
    q.method = RetrievalMethod::Hybrid;

    QuerySpec pool_spec = q;
    pool_spec.top_k = 1000000;  // no budget: full pool
    auto pool = minhash_query(index, pool_spec);
    auto hybrid = hybrid_query(index, q, p.catalog);

    std::unordered_set<std::string> pool_names;
    for (const auto& c : pool) pool_names.insert(c.table_name + "\x1f" + c.column_name);
    for (const auto& c : hybrid) {
        CHECK(pool_names.count(c.table_name + "\x1f" + c.column_name) == 1);
    }

    // Hybrid ranking equals exact ranking restricted to the pool, and the
    // scores agree with exact_match's containment values.
    auto exact = exact_match(q, p.catalog);
    std::vector<CandidateJoin> exact_in_pool;
    for (const auto& c : exact) {
        if (pool_names.count(c.table_name + "\x1f" + c.column_name)) {
            exact_in_pool.push_back(c);
        }
    }
    REQUIRE(hybrid.size() == exact_in_pool.size());
    for (std::size_t i = 0; i < hybrid.size(); ++i) {
        CHECK(hybrid[i].table_name == exact_in_pool[i].table_name);
        CHECK(*hybrid[i].score == doctest::Approx(*exact_in_pool[i].score));
    }
}

TEST_CASE("lsh recall against exact containment oracle") {
    // Smaller-scale version of the acceptance sweep: candidates with true
    // containment >= 0.3 must be found at build threshold 0.2.
    Rng rng(47);
    std::vector<Table> tables;
    std::vector<std::vector<std::string>> contents;
    auto qkeys = random_keys(rng, 300, 1 << 14);
    for (int t = 0; t < 120; ++t) {
        const double target = rng.uniform();
        const std::size_t overlap = static_cast<std::size_t>(target * 300);
        std::vector<std::string> vals(qkeys.begin(), qkeys.begin() + overlap);
        for (const auto& k : random_keys(rng, 100 + rng.below(400), 1 << 14)) {
            vals.push_back("x" + k);
        }
        contents.push_back(vals);
        tables.push_back(key_table("t" + std::to_string(t), "c", vals));
    }
    auto cat = make_catalog(std::move(tables));
    LshEnsembleIndex index = build_lsh_index(cat, 0.2, 256, 8, 101);

    Table base = key_table("base", "q", qkeys);
    QuerySpec q;
    q.base_table = &base;
    q.query_column = "q";
    q.method = RetrievalMethod::MinHash;
    q.top_k = 1000000;
    auto result = minhash_query(index, q);
    std::unordered_set<std::string> found;
    for (const auto& c : result) found.insert(c.table_name);

    int relevant = 0;
    int hit = 0;
    for (std::size_t t = 0; t < contents.size(); ++t) {
        if (brute_containment(qkeys, contents[t]) >= 0.3) {
            ++relevant;
            hit += found.count("t" + std::to_string(t));
        }
    }
    REQUIRE(relevant > 10);
    CHECK(static_cast<double>(hit) / relevant >= 0.95);
}
