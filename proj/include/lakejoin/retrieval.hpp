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
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lakejoin/catalog.hpp"
#include "lakejoin/sketch.hpp"
#include "lakejoin/table.hpp"

namespace lakejoin {

enum class RetrievalMethod { Exact, MinHash, Hybrid };

RetrievalMethod parse_retrieval_method(const std::string& name);
const char* retrieval_method_name(RetrievalMethod m);

enum class TieBreak { Lexicographic, SeededRandom };

struct QuerySpec {
    const Table* base_table = nullptr;  // not owned
    std::string query_column;
    int top_k = 30;
    RetrievalMethod method = RetrievalMethod::Exact;
    double threshold = 0.2;  // MinHash/Hybrid only
    TieBreak tie_break = TieBreak::Lexicographic;
    uint64_t tie_seed = 0;
};

/// One retrieved lake column. MinHash candidates carry no score (the
/// method returns an unranked pool); ranks are a contiguous 1..m prefix.
struct CandidateJoin {
    std::string table_name;
    std::string column_name;
    std::optional<double> score;  // containment; nullopt = unranked
    int rank = 0;
};

/// Eq-style Jaccard containment |Q∩C| / |Q|. Empty query raises DataError.
double containment(const std::unordered_set<std::string>& query,
                   const std::unordered_set<std::string>& candidate);

/// Distinct key set of the query column; raises when the column is missing.
std::unordered_set<std::string> query_key_set(const QuerySpec& q);

/// Exact containment of the query set against every lake column; top_k by
/// score with (table, column) lexicographic tie-break (or seeded-random
/// when requested); zero-score columns excluded.
std::vector<CandidateJoin> exact_match(const QuerySpec& q, const LakeCatalog& cat);

/// Cardinality-partitioned banded MinHash index. Columns are assigned to
/// equal-depth cardinality partitions; each partition keeps banded hash
/// buckets for a family of row counts so the most selective (bands, rows)
/// pair for a query's containment threshold can be chosen at query time,
/// following the usual LSH Ensemble parameterization.
class LshEnsembleIndex {
public:
    static constexpr uint32_t kFormatVersion = 1;

    struct ColumnEntry {
        std::string table_name;
        std::string column_name;
        uint64_t cardinality = 0;
        uint32_t partition = 0;
        std::vector<uint64_t> minima;
    };

    struct Partition {
        uint64_t upper_bound = 0;  // inclusive max cardinality
        // bucket_by_r[i]: band-hash -> column ids, for rows_per_band = 1<<i
        std::vector<std::unordered_map<uint64_t, std::vector<uint32_t>>> buckets_by_r;
    };

    LshEnsembleIndex() = default;
    LshEnsembleIndex(uint64_t seed, int num_perm, int num_partitions, double threshold,
                     std::vector<ColumnEntry> columns);

    uint64_t seed() const { return seed_; }
    int num_perm() const { return num_perm_; }
    int num_partitions() const { return num_partitions_; }
    double threshold() const { return threshold_; }
    const std::vector<ColumnEntry>& columns() const { return columns_; }
    const std::vector<Partition>& partitions() const { return partitions_; }
    bool empty() const { return columns_.empty(); }

    /// Column ids whose estimated containment of `query` reaches
    /// `threshold`, in index insertion order (no budget applied).
    std::vector<uint32_t> probe(const MinHashSketch& query, double threshold) const;

private:
    void build_partitions();

    uint64_t seed_ = 0;
    int num_perm_ = 256;
    int num_partitions_ = 8;
    double threshold_ = 0.2;
    std::vector<ColumnEntry> columns_;  // sorted by (table, column)
    std::vector<Partition> partitions_;
};

/// Sketches every non-empty lake column and assembles the index.
/// threshold must lie in (0,1); an empty catalog gives a valid empty index.
LshEnsembleIndex build_lsh_index(const LakeCatalog& cat, double threshold = 0.2,
                                 int num_perm = 256, int num_partitions = 8,
                                 uint64_t seed = 0);

/// Candidates with estimated containment >= q.threshold, unranked, in index
/// insertion order, truncated to top_k. The index must have been built with
/// a threshold <= q.threshold.
std::vector<CandidateJoin> minhash_query(const LshEnsembleIndex& index, const QuerySpec& q);

/// Variant taking a caller-built query sketch; raises on seed or num_perm
/// mismatch with the index.
std::vector<CandidateJoin> minhash_query(const LshEnsembleIndex& index, const QuerySpec& q,
                                         const MinHashSketch& query_sketch);

/// MinHash pool (no budget) re-scored by exact containment against the
/// catalog and ranked like exact_match.
std::vector<CandidateJoin> hybrid_query(const LshEnsembleIndex& index, const QuerySpec& q,
                                        const LakeCatalog& cat);

/// Versioned little-endian binary persistence; loading refuses other
/// versions. Save-load-save is byte stable.
void save_index(const LshEnsembleIndex& index, const std::filesystem::path& path);
LshEnsembleIndex load_index(const std::filesystem::path& path);

}  // namespace lakejoin
