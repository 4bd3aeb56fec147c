/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "lakejoin/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace lakejoin {

AggregationPolicy parse_aggregation(const std::string& name) {
    if (name == "any") return AggregationPolicy::Any;
    if (name == "mean") return AggregationPolicy::Mean;
    if (name == "dfs") return AggregationPolicy::DFS;
    throw DataError("unknown aggregation policy '" + name + "'");
}

const char* aggregation_name(AggregationPolicy p) {
    switch (p) {
        case AggregationPolicy::Any: return "any";
        case AggregationPolicy::Mean: return "mean";
        case AggregationPolicy::DFS: return "dfs";
    }
    return "?";
}

namespace {

// Group row indices by canonical join-key value, first-appearance order.
std::vector<std::vector<std::size_t>> group_rows(const Table& t, const std::string& join_key) {
    const Column& key = t.column(join_key);
    std::vector<std::vector<std::size_t>> groups;
    std::unordered_map<std::string, std::size_t> by_key;
    for (std::size_t r = 0; r < key.size(); ++r) {
        if (key.at(r).is_null()) continue;
        const std::string k = canonical_key(key.at(r));
        auto [it, inserted] = by_key.emplace(k, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(r);
    }
    if (groups.empty()) {
        throw DataError("aggregate: join key '" + join_key + "' has no non-null values");
    }
    return groups;
}

Cell mean_cell(const Column& col, const std::vector<std::size_t>& rows) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r : rows) {
        if (!col.at(r).is_null()) {
            sum += col.at(r).as_number();
            ++n;
        }
    }
    return n == 0 ? Cell::null() : Cell::number(sum / static_cast<double>(n));
}

Cell mode_cell(const Column& col, const std::vector<std::size_t>& rows) {
    std::map<std::string, std::size_t> counts;  // ordered: lexicographic tie-break
    for (std::size_t r : rows) {
        if (!col.at(r).is_null()) ++counts[col.at(r).as_text()];
    }
    if (counts.empty()) return Cell::null();
    const std::string* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [value, count] : counts) {
        if (count > best_count) {
            best_count = count;
            best = &value;
        }
    }
    return Cell::text(*best);
}

// Reserve a derived column name, de-colliding with "_2", "_3", ... suffixes.
std::string claim_name(std::unordered_set<std::string>& taken, std::string want) {
    if (taken.insert(want).second) return want;
    for (int i = 2;; ++i) {
        std::string alt = want + "_" + std::to_string(i);
        if (taken.insert(alt).second) return alt;
    }
}

Table aggregate_dfs(const Table& t, const std::string& join_key,
                    const std::vector<std::vector<std::size_t>>& groups) {
    const Column& key = t.column(join_key);
    std::vector<Cell> key_cells;
    key_cells.reserve(groups.size());
    for (const auto& g : groups) key_cells.push_back(key.at(g.front()));

    std::vector<Column> out;
    out.emplace_back(key.name(), key.dtype(), std::move(key_cells));
    std::unordered_set<std::string> taken{key.name()};

    for (const Column& col : t.columns()) {
        if (col.name() == join_key) continue;
        if (col.dtype() == Dtype::Numeric) {
            std::vector<Cell> mean_c, min_c, max_c, sum_c, std_c, count_c;
            for (const auto& g : groups) {
                double sum = 0.0, sum2 = 0.0, lo = 0.0, hi = 0.0;
                std::size_t n = 0;
                for (std::size_t r : g) {
                    if (col.at(r).is_null()) continue;
                    const double v = col.at(r).as_number();
                    if (n == 0) {
                        lo = hi = v;
                    } else {
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                    sum += v;
                    sum2 += v * v;
                    ++n;
                }
                count_c.push_back(Cell::number(static_cast<double>(n)));
                if (n == 0) {
                    mean_c.push_back(Cell::null());
                    min_c.push_back(Cell::null());
                    max_c.push_back(Cell::null());
                    sum_c.push_back(Cell::null());
                    std_c.push_back(Cell::null());
                    continue;
                }
                const double mean = sum / static_cast<double>(n);
                mean_c.push_back(Cell::number(mean));
                min_c.push_back(Cell::number(lo));
                max_c.push_back(Cell::number(hi));
                sum_c.push_back(Cell::number(sum));
                if (n == 1) {
                    std_c.push_back(Cell::null());
                } else {
                    const double var =
                        std::max(0.0, (sum2 - sum * mean) / static_cast<double>(n - 1));
                    std_c.push_back(Cell::number(std::sqrt(var)));
                }
            }
            out.emplace_back(claim_name(taken, col.name() + "__mean"), Dtype::Numeric, mean_c);
            out.emplace_back(claim_name(taken, col.name() + "__min"), Dtype::Numeric, min_c);
            out.emplace_back(claim_name(taken, col.name() + "__max"), Dtype::Numeric, max_c);
            out.emplace_back(claim_name(taken, col.name() + "__sum"), Dtype::Numeric, sum_c);
            out.emplace_back(claim_name(taken, col.name() + "__std"), Dtype::Numeric, std_c);
            out.emplace_back(claim_name(taken, col.name() + "__count"), Dtype::Numeric, count_c);
        } else {
            std::vector<Cell> mode_c, nunique_c, count_c;
            for (const auto& g : groups) {
                mode_c.push_back(mode_cell(col, g));
                std::unordered_set<std::string> distinct;
                std::size_t n = 0;
                for (std::size_t r : g) {
                    if (col.at(r).is_null()) continue;
                    distinct.insert(col.at(r).as_text());
                    ++n;
                }
                nunique_c.push_back(Cell::number(static_cast<double>(distinct.size())));
                count_c.push_back(Cell::number(static_cast<double>(n)));
            }
            out.emplace_back(claim_name(taken, col.name() + "__mode"), Dtype::Categorical, mode_c);
            out.emplace_back(claim_name(taken, col.name() + "__nunique"), Dtype::Numeric,
                             nunique_c);
            out.emplace_back(claim_name(taken, col.name() + "__count"), Dtype::Numeric, count_c);
        }
    }
    return Table(t.name(), std::move(out));
}

Table take_group_rows(const Table& t, const std::vector<std::size_t>& firsts) {
    return t.take(t.name(), firsts);
}

}  // namespace

Table aggregate(const Table& candidate, const std::string& join_key, AggregationPolicy policy) {
    const auto groups = group_rows(candidate, join_key);

    if (policy == AggregationPolicy::Any) {
        std::vector<std::size_t> firsts;
        firsts.reserve(groups.size());
        for (const auto& g : groups) firsts.push_back(g.front());
        return take_group_rows(candidate, firsts);
    }

    if (policy == AggregationPolicy::DFS) {
        return aggregate_dfs(candidate, join_key, groups);
    }

    // Mean
    std::vector<Column> out;
    for (const Column& col : candidate.columns()) {
        std::vector<Cell> cells;
        cells.reserve(groups.size());
        if (col.name() == join_key) {
            for (const auto& g : groups) cells.push_back(col.at(g.front()));
        } else if (col.dtype() == Dtype::Numeric) {
            for (const auto& g : groups) cells.push_back(mean_cell(col, g));
        } else {
            for (const auto& g : groups) cells.push_back(mode_cell(col, g));
        }
        out.emplace_back(col.name(), col.dtype(), std::move(cells));
    }
    return Table(candidate.name(), std::move(out));
}

Table aggregate_any_random(const Table& candidate, const std::string& join_key, Rng& rng) {
    const auto groups = group_rows(candidate, join_key);
    std::vector<std::size_t> picks;
    picks.reserve(groups.size());
    for (const auto& g : groups) picks.push_back(g[rng.below(g.size())]);
    return take_group_rows(candidate, picks);
}

Table left_join(const Table& base, const Table& right, const std::string& base_key,
                const std::string& right_key) {
    const Column& bkey = base.column(base_key);
    const Column& rkey = right.column(right_key);

    std::unordered_map<std::string, std::size_t> right_row;
    right_row.reserve(rkey.size());
    for (std::size_t r = 0; r < rkey.size(); ++r) {
        if (rkey.at(r).is_null()) {
            throw DataError("left_join: right key '" + right_key + "' holds nulls");
        }
        if (!right_row.emplace(canonical_key(rkey.at(r)), r).second) {
            throw DataError("left_join: right key '" + right_key +
                            "' is not unique; aggregate first");
        }
    }

    std::vector<std::size_t> match(base.num_rows(), SIZE_MAX);
    for (std::size_t r = 0; r < base.num_rows(); ++r) {
        if (bkey.at(r).is_null()) continue;
        auto it = right_row.find(canonical_key(bkey.at(r)));
        if (it != right_row.end()) match[r] = it->second;
    }

    std::vector<Column> out = base.columns();
    std::unordered_set<std::string> taken;
    for (const Column& col : out) taken.insert(col.name());

    for (const Column& col : right.columns()) {
        if (col.name() == right_key) continue;
        std::string name = col.name();
        if (taken.count(name)) name = right.name() + "__" + name;
        name = claim_name(taken, name);
        std::vector<Cell> cells;
        cells.reserve(base.num_rows());
        for (std::size_t r = 0; r < base.num_rows(); ++r) {
            cells.push_back(match[r] == SIZE_MAX ? Cell::null() : col.at(match[r]));
        }
        out.emplace_back(std::move(name), col.dtype(), std::move(cells));
    }
    return Table(base.name(), std::move(out));
}

}  // namespace lakejoin
