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
#include "lakejoin/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lakejoin/parallel.hpp"

namespace lakejoin {

namespace fs = std::filesystem;

LakeCatalog::LakeCatalog(fs::path lake_root, std::vector<TableProfile> entries,
                         std::vector<SkipRecord> skipped,
                         std::vector<std::shared_ptr<const Table>> tables)
    : lake_root_(std::move(lake_root)),
      entries_(std::move(entries)),
      skipped_(std::move(skipped)),
      tables_(std::move(tables)) {
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        if (entries_[i - 1].table_name == entries_[i].table_name) {
            throw DataError("catalog: duplicate table name '" + entries_[i].table_name + "'");
        }
    }
}

std::shared_ptr<const Table> LakeCatalog::table(std::size_t i) const {
    if (i < tables_.size() && tables_[i]) return tables_[i];
    const TableProfile& e = entries_.at(i);
    Table t = read_csv(lake_root_ / e.source);
    return std::make_shared<const Table>(
        Table(e.table_name, std::vector<Column>(t.columns())));
}

std::optional<std::size_t> LakeCatalog::find(const std::string& table_name) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), table_name,
                               [](const TableProfile& e, const std::string& n) {
                                   return e.table_name < n;
                               });
    if (it != entries_.end() && it->table_name == table_name) {
        return static_cast<std::size_t>(it - entries_.begin());
    }
    return std::nullopt;
}

namespace {

struct ScanItem {
    std::string table_name;
    std::string source;
    DtypeHints hints;
};

TableProfile profile_table(const Table& t, const std::string& name, const std::string& source) {
    TableProfile p;
    p.table_name = name;
    p.source = source;
    p.row_count = t.num_rows();
    p.columns.reserve(t.num_columns());
    for (const Column& col : t.columns()) {
        ColumnProfile cp;
        cp.name = col.name();
        cp.dtype = col.dtype();
        cp.distinct_count = distinct_values(col).size();
        cp.null_fraction =
            p.row_count == 0 ? 0.0
                             : static_cast<double>(col.null_count()) / static_cast<double>(p.row_count);
        p.columns.push_back(std::move(cp));
    }
    return p;
}

std::vector<ScanItem> items_from_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw DataError("cannot open manifest '" + manifest.string() + "'");
    std::vector<ScanItem> items;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (;;) {
            std::size_t tab = line.find('\t', start);
            parts.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (parts.size() < 2) {
            throw DataError(manifest.string() + ": line " + std::to_string(lineno) +
                            " needs at least name<TAB>path");
        }
        ScanItem item;
        item.table_name = parts[0];
        item.source = parts[1];
        if (parts.size() >= 3 && !parts[2].empty()) {
            std::istringstream hints(parts[2]);
            std::string piece;
            while (std::getline(hints, piece, ';')) {
                auto eq = piece.find('=');
                if (eq == std::string::npos) {
                    throw DataError(manifest.string() + ": line " + std::to_string(lineno) +
                                    " bad hint '" + piece + "'");
                }
                const std::string col = piece.substr(0, eq);
                const std::string ty = piece.substr(eq + 1);
                if (ty == "numeric") {
                    item.hints[col] = Dtype::Numeric;
                } else if (ty == "categorical") {
                    item.hints[col] = Dtype::Categorical;
                } else {
                    throw DataError(manifest.string() + ": line " + std::to_string(lineno) +
                                    " unknown dtype '" + ty + "'");
                }
            }
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<ScanItem> items_from_directory(const fs::path& root) {
    std::vector<ScanItem> items;
    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
        if (!it->is_regular_file()) continue;
        if (it->path().extension() != ".csv") continue;
        const std::string rel = fs::relative(it->path(), root).generic_string();
        ScanItem item;
        item.source = rel;
        item.table_name = rel.substr(0, rel.size() - 4);  // strip .csv
        items.push_back(std::move(item));
    }
    std::sort(items.begin(), items.end(),
              [](const ScanItem& a, const ScanItem& b) { return a.table_name < b.table_name; });
    return items;
}

}  // namespace

LakeCatalog scan_lake(const fs::path& root) {
    if (!fs::exists(root) || !fs::is_directory(root)) {
        throw DataError("lake root '" + root.string() + "' is not a directory");
    }

    std::vector<ScanItem> items;
    const fs::path manifest = root / "manifest.txt";
    if (fs::exists(manifest)) {
        items = items_from_manifest(manifest);
    } else {
        items = items_from_directory(root);
    }

    struct Slot {
        std::optional<TableProfile> profile;
        std::shared_ptr<const Table> table;
        std::optional<SkipRecord> skip;
    };
    std::vector<Slot> slots(items.size());

    parallel_for(items.size(), [&](std::size_t i) {
        const ScanItem& item = items[i];
        try {
            Table raw = read_csv(root / item.source, item.hints);
            auto t = std::make_shared<const Table>(
                Table(item.table_name, std::vector<Column>(raw.columns())));
            slots[i].profile = profile_table(*t, item.table_name, item.source);
            slots[i].table = std::move(t);
        } catch (const DataError& e) {
            slots[i].skip = SkipRecord{item.source, e.what()};
        }
    });

    std::vector<TableProfile> entries;
    std::vector<std::shared_ptr<const Table>> tables;
    std::vector<SkipRecord> skipped;
    for (auto& s : slots) {
        if (s.profile) {
            entries.push_back(std::move(*s.profile));
            tables.push_back(std::move(s.table));
        } else if (s.skip) {
            skipped.push_back(std::move(*s.skip));
        }
    }
    return LakeCatalog(root, std::move(entries), std::move(skipped), std::move(tables));
}

LakeCatalog make_catalog(std::vector<Table> tables) {
    std::sort(tables.begin(), tables.end(),
              [](const Table& a, const Table& b) { return a.name() < b.name(); });
    std::vector<TableProfile> entries;
    std::vector<std::shared_ptr<const Table>> retained;
    entries.reserve(tables.size());
    retained.reserve(tables.size());
    for (Table& t : tables) {
        entries.push_back(profile_table(t, t.name(), t.name() + ".csv"));
        retained.push_back(std::make_shared<const Table>(std::move(t)));
    }
    return LakeCatalog({}, std::move(entries), {}, std::move(retained));
}

CatalogSummary catalog_summary(const LakeCatalog& cat) {
    CatalogSummary s;
    s.n_tables = cat.size();
    if (s.n_tables == 0) return s;

    double null_sum = 0.0;
    double numeric_sum = 0.0;
    double categorical_sum = 0.0;
    for (const TableProfile& e : cat.entries()) {
        s.total_rows += e.row_count;
        s.total_cols += e.columns.size();
        double table_null = 0.0;
        for (const ColumnProfile& c : e.columns) {
            if (c.dtype == Dtype::Numeric) {
                numeric_sum += 1.0;
            } else {
                categorical_sum += 1.0;
            }
            table_null += c.null_fraction;
        }
        if (!e.columns.empty()) null_sum += table_null / static_cast<double>(e.columns.size());
    }
    const double n = static_cast<double>(s.n_tables);
    s.avg_rows = static_cast<double>(s.total_rows) / n;
    s.avg_cols = static_cast<double>(s.total_cols) / n;
    s.avg_numeric_cols = numeric_sum / n;
    s.avg_categorical_cols = categorical_sum / n;
    s.avg_null_fraction = null_sum / n;
    return s;
}

void save_catalog(const LakeCatalog& cat, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write catalog '" + path.string() + "'");
    out << "lakejoin-catalog\t" << LakeCatalog::kFormatVersion << "\n";
    out << "root\t" << cat.lake_root().generic_string() << "\n";
    for (const TableProfile& e : cat.entries()) {
        out << "T\t" << e.table_name << "\t" << e.source << "\t" << e.row_count << "\n";
        for (const ColumnProfile& c : e.columns) {
            out << "C\t" << c.name << "\t" << dtype_name(c.dtype) << "\t" << c.distinct_count
                << "\t" << canonical_number(c.null_fraction) << "\n";
        }
    }
    for (const SkipRecord& s : cat.skipped()) {
        out << "S\t" << s.source << "\t" << s.reason << "\n";
    }
}

LakeCatalog load_catalog(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open catalog '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("lakejoin-catalog\t", 0) != 0) {
        throw DataError("'" + path.string() + "' is not a lakejoin catalog");
    }
    const int version = std::stoi(line.substr(std::string("lakejoin-catalog\t").size()));
    if (version != LakeCatalog::kFormatVersion) {
        throw DataError("catalog version " + std::to_string(version) + " unsupported (expected " +
                        std::to_string(LakeCatalog::kFormatVersion) + ")");
    }

    fs::path root;
    std::vector<TableProfile> entries;
    std::vector<SkipRecord> skipped;
    auto split_tabs = [](const std::string& l) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (;;) {
            std::size_t tab = l.find('\t', start);
            parts.push_back(l.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        return parts;
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto parts = split_tabs(line);
        if (parts[0] == "root" && parts.size() == 2) {
            root = parts[1];
        } else if (parts[0] == "T" && parts.size() == 4) {
            TableProfile e;
            e.table_name = parts[1];
            e.source = parts[2];
            e.row_count = std::stoull(parts[3]);
            entries.push_back(std::move(e));
        } else if (parts[0] == "C" && parts.size() == 5) {
            if (entries.empty()) throw DataError("catalog: column line before any table");
            ColumnProfile c;
            c.name = parts[1];
            c.dtype = parts[2] == "numeric" ? Dtype::Numeric : Dtype::Categorical;
            c.distinct_count = std::stoull(parts[3]);
            double nf;
            if (!parse_number(parts[4], nf)) throw DataError("catalog: bad null fraction");
            c.null_fraction = nf;
            entries.back().columns.push_back(std::move(c));
        } else if (parts[0] == "S" && parts.size() >= 3) {
            skipped.push_back(SkipRecord{parts[1], parts[2]});
        } else {
            throw DataError("catalog: unrecognized line '" + line + "'");
        }
    }
    return LakeCatalog(root, std::move(entries), std::move(skipped), {});
}

}  // namespace lakejoin
