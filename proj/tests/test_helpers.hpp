// Shared fixture builders and brute-force oracles for the test suites.
#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "lakejoin/catalog.hpp"
#include "lakejoin/common.hpp"
#include "lakejoin/table.hpp"

namespace lakejoin::testing {

inline Cell N(double v) { return Cell::number(v); }
inline Cell T(const std::string& s) { return Cell::text(s); }
inline Cell Nil() { return Cell::null(); }

inline Column numeric_col(std::string name, std::vector<Cell> cells) {
    return Column(std::move(name), Dtype::Numeric, std::move(cells));
}

inline Column text_col(std::string name, std::vector<Cell> cells) {
    return Column(std::move(name), Dtype::Categorical, std::move(cells));
}

/// One-column categorical table holding exactly the given key strings.
inline Table key_table(const std::string& table_name, const std::string& col_name,
                       const std::vector<std::string>& keys) {
    std::vector<Cell> cells;
    cells.reserve(keys.size());
    for (const auto& k : keys) cells.push_back(Cell::text(k));
    return Table(table_name, {Column(col_name, Dtype::Categorical, std::move(cells))});
}

/// Random key universe element, "k000017"-style.
inline std::string key_name(uint64_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "k%06llu", static_cast<unsigned long long>(i));
    return buf;
}

/// Random subset of the key universe [0, universe) of the given size.
inline std::vector<std::string> random_keys(Rng& rng, std::size_t size, uint64_t universe) {
    std::unordered_set<uint64_t> chosen;
    while (chosen.size() < size) chosen.insert(rng.below(universe));
    std::vector<std::string> keys;
    keys.reserve(size);
    for (uint64_t v : chosen) keys.push_back(key_name(v));
    return keys;
}

/// Brute-force containment by set enumeration (independent of retrieval).
inline double brute_containment(const std::vector<std::string>& query,
                                const std::vector<std::string>& candidate) {
    std::unordered_set<std::string> q(query.begin(), query.end());
    std::unordered_set<std::string> c(candidate.begin(), candidate.end());
    std::size_t hits = 0;
    for (const auto& k : q) hits += c.count(k);
    return static_cast<double>(hits) / static_cast<double>(q.size());
}

/// Planted evaluation lake: the target is the sum of `n_informative` hidden
/// signals, each carried by one "zsig*" table with full key coverage; the
/// "noise*" tables carry unrelated values over a 90% key subset. Name order
/// puts noise tables first, so an unranked budget truncation loses the
/// informative tables while containment ranking keeps them on top.
struct PlantedEvalLake {
    Table base;  // key (categorical), y (numeric)
    LakeCatalog lake;
};

inline PlantedEvalLake planted_eval_lake(uint64_t seed, std::size_t n_rows,
                                         std::size_t n_informative, std::size_t n_noise) {
    Rng rng(seed);
    std::vector<Cell> key_cells;
    for (std::size_t i = 0; i < n_rows; ++i) key_cells.push_back(Cell::text(key_name(i)));

    std::vector<std::vector<double>> signals(n_informative, std::vector<double>(n_rows));
    for (auto& s : signals) {
        for (auto& v : s) v = rng.normal();
    }
    std::vector<Cell> y_cells;
    for (std::size_t i = 0; i < n_rows; ++i) {
        double y = 0.05 * rng.normal();
        for (const auto& s : signals) y += s[i];
        y_cells.push_back(Cell::number(y));
    }

    PlantedEvalLake fx;
    fx.base = Table("base", {Column("key", Dtype::Categorical, key_cells),
                             Column("y", Dtype::Numeric, y_cells)});

    std::vector<Table> tables;
    char buf[32];
    for (std::size_t s = 0; s < n_informative; ++s) {
        std::snprintf(buf, sizeof(buf), "zsig%02zu", s);
        std::vector<Cell> feat;
        for (std::size_t i = 0; i < n_rows; ++i) feat.push_back(Cell::number(signals[s][i]));
        tables.push_back(Table(buf, {Column("key", Dtype::Categorical, key_cells),
                                     Column("sig" + std::to_string(s), Dtype::Numeric, feat)}));
    }
    for (std::size_t t = 0; t < n_noise; ++t) {
        std::snprintf(buf, sizeof(buf), "noise%02zu", t);
        // 90% key subset: high but not perfect containment
        std::vector<Cell> keys, feat;
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (rng.below(10) == 0) continue;
            keys.push_back(key_cells[i]);
            feat.push_back(Cell::number(rng.normal()));
        }
        tables.push_back(Table(buf, {Column("key", Dtype::Categorical, keys),
                                     Column("n" + std::to_string(t), Dtype::Numeric, feat)}));
    }
    fx.lake = make_catalog(std::move(tables));
    return fx;
}

}  // namespace lakejoin::testing
