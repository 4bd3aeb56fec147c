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
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "lakejoin/common.hpp"

namespace lakejoin {

/// One value in a column: null, a finite-or-infinite double (never NaN),
/// or a non-empty UTF-8 string. NaN and "" normalize to null on ingest.
class Cell {
public:
    Cell() : value_(std::monostate{}) {}

    static Cell null() { return Cell(); }

    static Cell number(double v) {
        Cell c;
        if (!(v != v)) c.value_ = v;  // NaN maps to null
        return c;
    }

    static Cell text(std::string v) {
        Cell c;
        if (!v.empty()) c.value_ = std::move(v);
        return c;
    }

    bool is_null() const { return std::holds_alternative<std::monostate>(value_); }
    bool is_number() const { return std::holds_alternative<double>(value_); }
    bool is_text() const { return std::holds_alternative<std::string>(value_); }

    double as_number() const { return std::get<double>(value_); }
    const std::string& as_text() const { return std::get<std::string>(value_); }

    bool operator==(const Cell& other) const { return value_ == other.value_; }

    std::size_t byte_size() const {
        return sizeof(Cell) + (is_text() ? as_text().size() : 0);
    }

private:
    std::variant<std::monostate, double, std::string> value_;
};

enum class Dtype { Numeric, Categorical };

const char* dtype_name(Dtype d);

/// Canonical string form of a non-null cell, used as the join/containment
/// key: text is taken byte for byte, numbers render as the shortest decimal
/// string that round-trips, so "1" and "1.0" unify.
std::string canonical_key(const Cell& cell);

/// Renders a double in the same shortest round-trip form.
std::string canonical_number(double v);

class Column {
public:
    Column(std::string name, Dtype dtype, std::vector<Cell> cells);

    const std::string& name() const { return name_; }
    Dtype dtype() const { return dtype_; }
    const std::vector<Cell>& cells() const { return cells_; }
    std::size_t size() const { return cells_.size(); }
    const Cell& at(std::size_t row) const { return cells_[row]; }

    std::size_t null_count() const;

private:
    std::string name_;
    Dtype dtype_;
    std::vector<Cell> cells_;
};

/// Set of distinct canonical keys over the non-null cells of a column.
/// All containment math treats columns with these set semantics.
std::unordered_set<std::string> distinct_values(const Column& col);

/// Row-aligned collection of uniquely named columns. Immutable after
/// construction; the constructor enforces equal lengths and unique names.
class Table {
public:
    Table() = default;
    Table(std::string name, std::vector<Column> columns);

    const std::string& name() const { return name_; }
    const std::vector<Column>& columns() const { return columns_; }
    std::size_t num_columns() const { return columns_.size(); }
    std::size_t num_rows() const { return columns_.empty() ? 0 : columns_[0].size(); }

    bool has_column(const std::string& name) const;
    std::optional<std::size_t> column_index(const std::string& name) const;
    /// Throws DataError when the column does not exist.
    const Column& column(const std::string& name) const;

    /// Approximate in-memory footprint, used for peak-bytes metering.
    std::size_t byte_size() const;

    /// Projection onto the named columns, preserving their given order.
    Table select(const std::string& new_name, const std::vector<std::string>& names) const;

    /// Row subset in the given order (indices may repeat).
    Table take(const std::string& new_name, const std::vector<std::size_t>& rows) const;

private:
    std::string name_;
    std::vector<Column> columns_;
};

/// Pinned 64-bit hash of a canonical key: seeded FNV-1a over the bytes
/// followed by a 64-bit avalanche finalizer. Deterministic across runs and
/// platforms; the on-disk index format depends on it.
uint64_t hash_key(const std::string& key, uint64_t seed);

}  // namespace lakejoin
