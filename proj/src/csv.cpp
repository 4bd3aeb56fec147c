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
#include "lakejoin/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace lakejoin {

namespace {

bool is_null_token(const std::string& tok) {
    if (tok.empty()) return true;
    if (tok.size() == 2 && (tok[0] == 'N' || tok[0] == 'n') && (tok[1] == 'A' || tok[1] == 'a')) {
        return true;
    }
    return false;
}

// Splits raw CSV text into records of fields, honoring RFC-4180 quoting
// (quoted fields may contain commas, doubled quotes, and newlines).
std::vector<std::vector<std::string>> tokenize(const std::string& text, const std::string& name) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    std::size_t i = 0;
    // Skip a UTF-8 BOM if present.
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;

    auto end_field = [&] {
        fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(fields));
        fields.clear();
    };

    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field_started && field.empty()) {
                    in_quotes = true;
                    field_started = true;
                } else {
                    field += c;  // stray quote inside unquoted field, keep literal
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                end_record();
                ++line;
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                field += c;
                field_started = true;
                break;
        }
    }
    if (in_quotes) {
        throw DataError(name + ": unterminated quoted field starting before line " +
                        std::to_string(line));
    }
    if (field_started || !field.empty() || !fields.empty()) end_record();
    return records;
}

}  // namespace

bool parse_number(const std::string& token, double& out) {
    if (token.empty()) return false;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

Table read_csv_text(const std::string& text, const std::string& name, const DtypeHints& hints) {
    auto records = tokenize(text, name);
    if (records.empty()) throw DataError(name + ": missing header row");

    const std::vector<std::string>& header = records[0];
    std::unordered_set<std::string> seen;
    for (const auto& h : header) {
        if (!seen.insert(h).second) {
            throw DataError(name + ": duplicate header name '" + h + "'");
        }
    }
    const std::size_t width = header.size();
    const std::size_t nrows = records.size() - 1;

    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != width) {
            throw DataError(name + ": row " + std::to_string(r) + " has " +
                            std::to_string(records[r].size()) + " fields, expected " +
                            std::to_string(width));
        }
    }

    std::vector<Column> columns;
    columns.reserve(width);
    for (std::size_t c = 0; c < width; ++c) {
        std::optional<Dtype> hinted;
        if (auto it = hints.find(header[c]); it != hints.end()) hinted = it->second;

        bool all_numeric = true;
        if (!hinted) {
            for (std::size_t r = 1; r <= nrows && all_numeric; ++r) {
                const std::string& tok = records[r][c];
                if (is_null_token(tok)) continue;
                double v;
                all_numeric = parse_number(tok, v);
            }
        }
        const Dtype dtype = hinted.value_or(all_numeric ? Dtype::Numeric : Dtype::Categorical);

        std::vector<Cell> cells;
        cells.reserve(nrows);
        for (std::size_t r = 1; r <= nrows; ++r) {
            const std::string& tok = records[r][c];
            if (is_null_token(tok)) {
                cells.push_back(Cell::null());
            } else if (dtype == Dtype::Numeric) {
                double v;
                if (!parse_number(tok, v)) {
                    throw DataError(name + ": column '" + header[c] + "' hinted numeric but row " +
                                    std::to_string(r) + " holds '" + tok + "'");
                }
                cells.push_back(Cell::number(v));
            } else {
                cells.push_back(Cell::text(tok));
            }
        }
        columns.emplace_back(header[c], dtype, std::move(cells));
    }
    return Table(name, std::move(columns));
}

Table read_csv(const std::filesystem::path& path, const DtypeHints& hints) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string name = path.stem().string();
    return read_csv_text(buf.str(), name, hints);
}

namespace {

void write_field(std::string& out, const std::string& field) {
    const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) {
        out += field;
        return;
    }
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

}  // namespace

std::string write_csv_text(const Table& table) {
    std::string out;
    for (std::size_t c = 0; c < table.num_columns(); ++c) {
        if (c) out += ',';
        write_field(out, table.columns()[c].name());
    }
    out += '\n';
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
        for (std::size_t c = 0; c < table.num_columns(); ++c) {
            if (c) out += ',';
            const Cell& cell = table.columns()[c].at(r);
            if (cell.is_null()) continue;  // null emits as empty field
            if (cell.is_number()) {
                out += canonical_number(cell.as_number());
            } else {
                write_field(out, cell.as_text());
            }
        }
        out += '\n';
    }
    return out;
}

void write_csv(const Table& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << write_csv_text(table);
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace lakejoin
