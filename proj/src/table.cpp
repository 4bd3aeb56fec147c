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
#include "lakejoin/table.hpp"

#include <charconv>
#include <unordered_map>

namespace lakejoin {

const char* dtype_name(Dtype d) {
    return d == Dtype::Numeric ? "numeric" : "categorical";
}

std::string canonical_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string canonical_key(const Cell& cell) {
    if (cell.is_text()) return cell.as_text();
    if (cell.is_number()) return canonical_number(cell.as_number());
    throw DataError("canonical_key: null cell has no key");
}

Column::Column(std::string name, Dtype dtype, std::vector<Cell> cells)
    : name_(std::move(name)), dtype_(dtype), cells_(std::move(cells)) {
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const Cell& c = cells_[i];
        if (c.is_null()) continue;
        if (dtype_ == Dtype::Numeric && !c.is_number()) {
            throw DataError("column '" + name_ + "': non-numeric cell at row " +
                            std::to_string(i));
        }
        if (dtype_ == Dtype::Categorical && !c.is_text()) {
            throw DataError("column '" + name_ + "': non-text cell at row " +
                            std::to_string(i));
        }
    }
}

std::size_t Column::null_count() const {
    std::size_t n = 0;
    for (const Cell& c : cells_) n += c.is_null() ? 1 : 0;
    return n;
}

std::unordered_set<std::string> distinct_values(const Column& col) {
    std::unordered_set<std::string> out;
    out.reserve(col.size());
    for (const Cell& c : col.cells()) {
        if (!c.is_null()) out.insert(canonical_key(c));
    }
    return out;
}

Table::Table(std::string name, std::vector<Column> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {
    std::unordered_set<std::string> seen;
    for (const Column& col : columns_) {
        if (!seen.insert(col.name()).second) {
            throw DataError("table '" + name_ + "': duplicate column '" + col.name() + "'");
        }
        if (col.size() != columns_[0].size()) {
            throw DataError("table '" + name_ + "': column '" + col.name() +
                            "' has " + std::to_string(col.size()) + " rows, expected " +
                            std::to_string(columns_[0].size()));
        }
    }
}

bool Table::has_column(const std::string& name) const {
    return column_index(name).has_value();
}

std::optional<std::size_t> Table::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name() == name) return i;
    }
    return std::nullopt;
}

const Column& Table::column(const std::string& name) const {
    auto idx = column_index(name);
    if (!idx) throw DataError("table '" + name_ + "': no column '" + name + "'");
    return columns_[*idx];
}

std::size_t Table::byte_size() const {
    std::size_t total = sizeof(Table);
    for (const Column& col : columns_) {
        for (const Cell& c : col.cells()) total += c.byte_size();
    }
    return total;
}

Table Table::select(const std::string& new_name, const std::vector<std::string>& names) const {
    std::vector<Column> cols;
    cols.reserve(names.size());
    for (const auto& n : names) cols.push_back(column(n));
    return Table(new_name, std::move(cols));
}

Table Table::take(const std::string& new_name, const std::vector<std::size_t>& rows) const {
    std::vector<Column> cols;
    cols.reserve(columns_.size());
    for (const Column& col : columns_) {
        std::vector<Cell> cells;
        cells.reserve(rows.size());
        for (std::size_t r : rows) cells.push_back(col.at(r));
        cols.emplace_back(col.name(), col.dtype(), std::move(cells));
    }
    return Table(new_name, std::move(cols));
}

uint64_t hash_key(const std::string& key, uint64_t seed) {
    uint64_t h = 1469598103934665603ull ^ (seed * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull);
    for (unsigned char b : key) {
        h ^= b;
        h *= 1099511628211ull;
    }
    // murmur3 fmix64
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDull;
    h ^= h >> 33;
    h *= 0xC4CEB9FE1A85EC53ull;
    h ^= h >> 33;
    return h;
}

}  // namespace lakejoin
