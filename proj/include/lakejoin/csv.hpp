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
#include <map>
#include <optional>
#include <string>

#include "lakejoin/table.hpp"

namespace lakejoin {

using DtypeHints = std::map<std::string, Dtype>;

/// Reads a comma-delimited, RFC-4180-quoted, UTF-8 CSV with a mandatory
/// header row. Tokens "" and "NA" (case-insensitive) become null. Unhinted
/// columns infer Numeric iff every non-null token parses as a decimal
/// number, else Categorical. Ragged rows and duplicate headers raise
/// DataError naming the offending row/column.
Table read_csv(const std::filesystem::path& path, const DtypeHints& hints = {});

/// Same parser over an in-memory buffer; `name` becomes the table name.
Table read_csv_text(const std::string& text, const std::string& name,
                    const DtypeHints& hints = {});

/// Writes RFC-4180 CSV; nulls emit as the empty field. read_csv of the
/// output reproduces the table (round-trip fixed point).
void write_csv(const Table& table, const std::filesystem::path& path);
std::string write_csv_text(const Table& table);

/// True when the full token parses as a decimal number (from_chars, whole
/// token consumed). Shared by the reader's dtype inference and synth.
bool parse_number(const std::string& token, double& out);

}  // namespace lakejoin
