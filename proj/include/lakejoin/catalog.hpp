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

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "lakejoin/csv.hpp"
#include "lakejoin/table.hpp"

namespace lakejoin {

struct ColumnProfile {
    std::string name;
    Dtype dtype = Dtype::Categorical;
    std::size_t distinct_count = 0;
    double null_fraction = 0.0;  // nulls / rows, 0 for empty tables
};

struct TableProfile {
    std::string table_name;
    std::string source;  // path relative to the lake root
    std::size_t row_count = 0;
    std::vector<ColumnProfile> columns;
};

struct SkipRecord {
    std::string source;
    std::string reason;
};

/// Profiles of every readable CSV in a lake directory. Scanning retains
/// the parsed tables so retrieval and merging can reach column data
/// without re-reading files; a catalog loaded back from its serialized
/// form reloads tables from the lake root on demand.
class LakeCatalog {
public:
    static constexpr int kFormatVersion = 1;

    LakeCatalog() = default;
    LakeCatalog(std::filesystem::path lake_root, std::vector<TableProfile> entries,
                std::vector<SkipRecord> skipped,
                std::vector<std::shared_ptr<const Table>> tables);

    const std::filesystem::path& lake_root() const { return lake_root_; }
    const std::vector<TableProfile>& entries() const { return entries_; }
    const std::vector<SkipRecord>& skipped() const { return skipped_; }
    int manifest_version() const { return kFormatVersion; }

    std::size_t size() const { return entries_.size(); }

    /// Table data for entry i; reads from disk when not retained in memory.
    std::shared_ptr<const Table> table(std::size_t i) const;

    /// Entry index by table name, or nullopt.
    std::optional<std::size_t> find(const std::string& table_name) const;

private:
    std::filesystem::path lake_root_;
    std::vector<TableProfile> entries_;  // sorted by table_name
    std::vector<SkipRecord> skipped_;
    std::vector<std::shared_ptr<const Table>> tables_;  // parallel to entries_, may hold nulls
};

/// Recursively profiles every *.csv under root (or the entries of an
/// optional manifest.txt). Unreadable files become skip records; an empty
/// directory yields an empty catalog. Missing root raises DataError.
LakeCatalog scan_lake(const std::filesystem::path& root);

struct CatalogSummary {
    std::size_t n_tables = 0;
    std::size_t total_rows = 0;
    std::size_t total_cols = 0;
    double avg_rows = 0.0;
    double avg_cols = 0.0;
    double avg_numeric_cols = 0.0;
    double avg_categorical_cols = 0.0;
    double avg_null_fraction = 0.0;
};

CatalogSummary catalog_summary(const LakeCatalog& cat);

/// In-memory catalog over already-built tables (synth output, fixtures);
/// entries are sorted by table name, no backing files.
LakeCatalog make_catalog(std::vector<Table> tables);

/// Versioned tab-separated text serialization of the profiles (table data
/// is not persisted). Scanning an unchanged directory twice produces
/// byte-identical files.
void save_catalog(const LakeCatalog& cat, const std::filesystem::path& path);
LakeCatalog load_catalog(const std::filesystem::path& path);

}  // namespace lakejoin
