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
#include "lakejoin/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include "lakejoin/parallel.hpp"

namespace lakejoin {

RetrievalMethod parse_retrieval_method(const std::string& name) {
    if (name == "exact") return RetrievalMethod::Exact;
    if (name == "minhash") return RetrievalMethod::MinHash;
    if (name == "hybrid") return RetrievalMethod::Hybrid;
    throw DataError("unknown retrieval method '" + name + "'");
}

const char* retrieval_method_name(RetrievalMethod m) {
    switch (m) {
        case RetrievalMethod::Exact: return "exact";
        case RetrievalMethod::MinHash: return "minhash";
        case RetrievalMethod::Hybrid: return "hybrid";
    }
    return "?";
}

double containment(const std::unordered_set<std::string>& query,
                   const std::unordered_set<std::string>& candidate) {
    if (query.empty()) throw DataError("containment: empty query set");
    std::size_t hits = 0;
    for (const std::string& k : query) hits += candidate.count(k);
    return static_cast<double>(hits) / static_cast<double>(query.size());
}

std::unordered_set<std::string> query_key_set(const QuerySpec& q) {
    if (q.base_table == nullptr) throw DataError("query: no base table");
    return distinct_values(q.base_table->column(q.query_column));
}

namespace {

struct Scored {
    double score;
    const std::string* table;
    const std::string* column;
};

// Shared ranking for exact_match and hybrid_query: score descending, ties
// by (table, column) lexicographic or by a seeded per-candidate hash.
std::vector<CandidateJoin> rank_candidates(std::vector<Scored> scored, int top_k,
                                           TieBreak tie_break, uint64_t tie_seed) {
    auto lex_less = [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        if (*a.table != *b.table) return *a.table < *b.table;
        return *a.column < *b.column;
    };
    if (tie_break == TieBreak::Lexicographic) {
        std::sort(scored.begin(), scored.end(), lex_less);
    } else {
        std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
            if (a.score != b.score) return a.score > b.score;
            const uint64_t ha = hash_key(*a.table + '\x1f' + *a.column, tie_seed);
            const uint64_t hb = hash_key(*b.table + '\x1f' + *b.column, tie_seed);
            if (ha != hb) return ha < hb;
            if (*a.table != *b.table) return *a.table < *b.table;
            return *a.column < *b.column;
        });
    }
    if (static_cast<int>(scored.size()) > top_k) scored.resize(top_k);

    std::vector<CandidateJoin> out;
    out.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        out.push_back(CandidateJoin{*scored[i].table, *scored[i].column, scored[i].score,
                                    static_cast<int>(i + 1)});
    }
    return out;
}

}  // namespace

std::vector<CandidateJoin> exact_match(const QuerySpec& q, const LakeCatalog& cat) {
    const auto query = query_key_set(q);
    if (query.empty()) throw DataError("exact_match: query column has no values");
    if (q.top_k < 1) throw DataError("exact_match: top_k must be >= 1");

    struct TableScores {
        std::vector<std::pair<std::size_t, double>> per_column;  // (column idx, score)
    };
    std::vector<TableScores> slots(cat.size());
    parallel_for(cat.size(), [&](std::size_t i) {
        auto t = cat.table(i);
        for (std::size_t c = 0; c < t->num_columns(); ++c) {
            const auto values = distinct_values(t->columns()[c]);
            const double score = containment(query, values);
            if (score > 0.0) slots[i].per_column.emplace_back(c, score);
        }
    });

    std::vector<Scored> scored;
    for (std::size_t i = 0; i < cat.size(); ++i) {
        const TableProfile& e = cat.entries()[i];
        for (const auto& [c, score] : slots[i].per_column) {
            scored.push_back(Scored{score, &e.table_name, &e.columns[c].name});
        }
    }
    return rank_candidates(std::move(scored), q.top_k, q.tie_break, q.tie_seed);
}

// ---------------------------------------------------------------------------
// LSH Ensemble
// ---------------------------------------------------------------------------

namespace {

// Row counts per band available in every partition: powers of two.
std::vector<int> band_row_family(int num_perm) {
    std::vector<int> family;
    for (int r = 1; r <= num_perm && family.size() < 8; r *= 2) family.push_back(r);
    return family;
}

uint64_t band_hash(const uint64_t* values, int count, uint64_t salt) {
    uint64_t h = 1469598103934665603ull ^ (salt * 0x9E3779B97F4A7C15ull);
    for (int i = 0; i < count; ++i) {
        uint64_t v = values[i];
        for (int byte = 0; byte < 8; ++byte) {
            h ^= v & 0xFF;
            h *= 1099511628211ull;
            v >>= 8;
        }
    }
    return h;
}

// Probability that at least one of b bands of r rows agrees, at Jaccard s.
double collision_probability(double s, int r, int b) {
    return 1.0 - std::pow(1.0 - std::pow(s, r), b);
}

double integrate(double lo, double hi, const std::function<double(double)>& f) {
    if (hi <= lo) return 0.0;
    constexpr int kIntervals = 128;  // even, for Simpson's rule
    const double h = (hi - lo) / kIntervals;
    double sum = f(lo) + f(hi);
    for (int i = 1; i < kIntervals; ++i) {
        sum += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

// Standard LSH Ensemble tuning: among the available (bands, rows) pairs,
// pick the one minimizing false positive + false negative area around the
// Jaccard threshold.
int optimal_family_entry(double jaccard_threshold, int num_perm, const std::vector<int>& family) {
    int best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < family.size(); ++i) {
        const int r = family[i];
        const int b = num_perm / r;
        if (b < 1) continue;
        const double fp = integrate(0.0, jaccard_threshold, [&](double s) {
            return collision_probability(s, r, b);
        });
        const double fn = integrate(jaccard_threshold, 1.0, [&](double s) {
            return 1.0 - collision_probability(s, r, b);
        });
        const double cost = fp + fn;
        if (cost < best_cost) {
            best_cost = cost;
            best = static_cast<int>(i);
        }
    }
    return best;
}

}  // namespace

LshEnsembleIndex::LshEnsembleIndex(uint64_t seed, int num_perm, int num_partitions,
                                   double threshold, std::vector<ColumnEntry> columns)
    : seed_(seed),
      num_perm_(num_perm),
      num_partitions_(num_partitions),
      threshold_(threshold),
      columns_(std::move(columns)) {
    for (std::size_t i = 1; i < columns_.size(); ++i) {
        const auto& a = columns_[i - 1];
        const auto& b = columns_[i];
        if (std::tie(a.table_name, a.column_name) >= std::tie(b.table_name, b.column_name)) {
            throw DataError("lsh index: column entries must be sorted and unique");
        }
    }
    build_partitions();
}

void LshEnsembleIndex::build_partitions() {
    uint32_t max_partition = 0;
    for (const auto& c : columns_) max_partition = std::max(max_partition, c.partition);
    if (columns_.empty()) return;
    partitions_.resize(max_partition + 1);

    const std::vector<int> family = band_row_family(num_perm_);
    for (auto& p : partitions_) {
        p.upper_bound = 0;
        p.buckets_by_r.assign(family.size(), {});
    }
    for (uint32_t id = 0; id < columns_.size(); ++id) {
        const ColumnEntry& col = columns_[id];
        Partition& p = partitions_[col.partition];
        p.upper_bound = std::max(p.upper_bound, col.cardinality);
        for (std::size_t fi = 0; fi < family.size(); ++fi) {
            const int r = family[fi];
            const int b = num_perm_ / r;
            for (int band = 0; band < b; ++band) {
                const uint64_t salt = (static_cast<uint64_t>(r) << 32) | static_cast<uint64_t>(band);
                const uint64_t h = band_hash(col.minima.data() + band * r, r, salt);
                p.buckets_by_r[fi][h].push_back(id);
            }
        }
    }
}

std::vector<uint32_t> LshEnsembleIndex::probe(const MinHashSketch& query,
                                              double threshold) const {
    if (query.seed != seed_ || query.num_perm != num_perm_) {
        throw DataError("lsh probe: query sketch seed/num_perm mismatch");
    }
    if (query.set_cardinality == 0) throw DataError("lsh probe: empty query set");
    if (columns_.empty()) return {};

    const std::vector<int> family = band_row_family(num_perm_);
    const double x = static_cast<double>(query.set_cardinality);
    std::vector<char> seen(columns_.size(), 0);

    for (const Partition& p : partitions_) {
        if (p.upper_bound == 0) continue;
        const double u = static_cast<double>(p.upper_bound);
        double jt = threshold * x / (x + u - threshold * x);
        jt = std::clamp(jt, 1e-9, 1.0);
        const int fi = optimal_family_entry(jt, num_perm_, family);
        const int r = family[fi];
        const int b = num_perm_ / r;
        for (int band = 0; band < b; ++band) {
            const uint64_t salt = (static_cast<uint64_t>(r) << 32) | static_cast<uint64_t>(band);
            const uint64_t h = band_hash(query.minima.data() + band * r, r, salt);
            auto it = p.buckets_by_r[fi].find(h);
            if (it == p.buckets_by_r[fi].end()) continue;
            for (uint32_t id : it->second) seen[id] = 1;
        }
    }

    std::vector<uint32_t> out;
    for (uint32_t id = 0; id < columns_.size(); ++id) {
        if (!seen[id]) continue;
        MinHashSketch cand;
        cand.seed = seed_;
        cand.num_perm = num_perm_;
        cand.minima = columns_[id].minima;
        cand.set_cardinality = columns_[id].cardinality;
        if (estimate_containment(query, cand) >= threshold) out.push_back(id);
    }
    return out;
}

LshEnsembleIndex build_lsh_index(const LakeCatalog& cat, double threshold, int num_perm,
                                 int num_partitions, uint64_t seed) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw DataError("build_lsh_index: threshold must be in (0,1)");
    }
    if (num_perm < 8) throw DataError("build_lsh_index: num_perm must be >= 8");
    if (num_partitions < 1) throw DataError("build_lsh_index: num_partitions must be >= 1");

    // Sketch every non-empty column; insertion order is (table, column).
    std::vector<std::size_t> slot_base(cat.size() + 1, 0);
    for (std::size_t i = 0; i < cat.size(); ++i) {
        slot_base[i + 1] = slot_base[i] + cat.entries()[i].columns.size();
    }

    std::vector<std::optional<LshEnsembleIndex::ColumnEntry>> slots(slot_base.back());
    parallel_for(cat.size(), [&](std::size_t entry) {
        auto t = cat.table(entry);
        for (std::size_t c = 0; c < t->num_columns(); ++c) {
            const Column& col = t->columns()[c];
            const auto keys = distinct_values(col);
            if (keys.empty()) continue;  // nothing joinable
            LshEnsembleIndex::ColumnEntry ce;
            ce.table_name = cat.entries()[entry].table_name;
            ce.column_name = col.name();
            ce.cardinality = keys.size();
            MinHashSketch s = sketch_keys(keys, seed, num_perm);
            ce.minima = std::move(s.minima);
            slots[slot_base[entry] + c] = std::move(ce);
        }
    });

    std::vector<LshEnsembleIndex::ColumnEntry> columns;
    for (auto& s : slots) {
        if (s) columns.push_back(std::move(*s));
    }

    // Equal-depth cardinality partitions; ties in cardinality never straddle
    // a boundary so upper bounds stay non-overlapping.
    if (!columns.empty()) {
        std::vector<uint32_t> order(columns.size());
        for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
            if (columns[a].cardinality != columns[b].cardinality) {
                return columns[a].cardinality < columns[b].cardinality;
            }
            return a < b;
        });
        const std::size_t target =
            (order.size() + num_partitions - 1) / static_cast<std::size_t>(num_partitions);
        uint32_t part = 0;
        std::size_t in_part = 0;
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            columns[order[pos]].partition = part;
            ++in_part;
            const bool boundary = in_part >= target && pos + 1 < order.size() &&
                                  columns[order[pos + 1]].cardinality >
                                      columns[order[pos]].cardinality;
            if (boundary && part + 1 < static_cast<uint32_t>(num_partitions)) {
                ++part;
                in_part = 0;
            }
        }
    }

    return LshEnsembleIndex(seed, num_perm, num_partitions, threshold, std::move(columns));
}

namespace {

std::vector<CandidateJoin> pool_to_candidates(const LshEnsembleIndex& index,
                                              const std::vector<uint32_t>& pool, int top_k) {
    std::vector<CandidateJoin> out;
    const std::size_t n = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(top_k));
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& col = index.columns()[pool[i]];
        out.push_back(CandidateJoin{col.table_name, col.column_name, std::nullopt,
                                    static_cast<int>(i + 1)});
    }
    return out;
}

void check_query_threshold(const LshEnsembleIndex& index, const QuerySpec& q) {
    if (q.threshold < index.threshold()) {
        throw DataError("minhash query threshold " + canonical_number(q.threshold) +
                        " below index build threshold " + canonical_number(index.threshold()));
    }
    if (q.top_k < 1) throw DataError("minhash query: top_k must be >= 1");
}

}  // namespace

std::vector<CandidateJoin> minhash_query(const LshEnsembleIndex& index, const QuerySpec& q) {
    check_query_threshold(index, q);
    const auto query = query_key_set(q);
    if (query.empty()) throw DataError("minhash query: query column has no values");
    const MinHashSketch sketch = sketch_keys(query, index.seed(), index.num_perm());
    return pool_to_candidates(index, index.probe(sketch, q.threshold), q.top_k);
}

std::vector<CandidateJoin> minhash_query(const LshEnsembleIndex& index, const QuerySpec& q,
                                         const MinHashSketch& query_sketch) {
    check_query_threshold(index, q);
    if (query_sketch.seed != index.seed() || query_sketch.num_perm != index.num_perm()) {
        throw DataError("minhash query: sketch seed/num_perm does not match index");
    }
    return pool_to_candidates(index, index.probe(query_sketch, q.threshold), q.top_k);
}

std::vector<CandidateJoin> hybrid_query(const LshEnsembleIndex& index, const QuerySpec& q,
                                        const LakeCatalog& cat) {
    check_query_threshold(index, q);
    const auto query = query_key_set(q);
    if (query.empty()) throw DataError("hybrid query: query column has no values");
    const MinHashSketch sketch = sketch_keys(query, index.seed(), index.num_perm());
    const std::vector<uint32_t> pool = index.probe(sketch, q.threshold);

    // Exact re-scoring of the pool, loading each referenced table once.
    std::vector<double> scores(pool.size(), 0.0);
    std::vector<std::size_t> entry_of(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& col = index.columns()[pool[i]];
        auto entry = cat.find(col.table_name);
        if (!entry) throw DataError("hybrid query: index table '" + col.table_name +
                                    "' missing from catalog");
        entry_of[i] = *entry;
    }
    parallel_for(pool.size(), [&](std::size_t i) {
        const auto& col = index.columns()[pool[i]];
        auto t = cat.table(entry_of[i]);
        scores[i] = containment(query, distinct_values(t->column(col.column_name)));
    });

    std::vector<Scored> scored;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (scores[i] <= 0.0) continue;
        const auto& col = index.columns()[pool[i]];
        scored.push_back(Scored{scores[i], &col.table_name, &col.column_name});
    }
    return rank_candidates(std::move(scored), q.top_k, q.tie_break, q.tie_seed);
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'L', 'J', 'I', 'X'};

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("index file truncated");
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const uint32_t len = read_pod<uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw DataError("index file truncated");
    return s;
}

}  // namespace

void save_index(const LshEnsembleIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write index '" + path.string() + "'");
    out.write(kMagic, 4);
    write_pod<uint32_t>(out, LshEnsembleIndex::kFormatVersion);
    write_pod<uint64_t>(out, index.seed());
    write_pod<uint32_t>(out, static_cast<uint32_t>(index.num_perm()));
    write_pod<uint32_t>(out, static_cast<uint32_t>(index.num_partitions()));
    write_pod<double>(out, index.threshold());
    write_pod<uint32_t>(out, static_cast<uint32_t>(index.columns().size()));
    for (const auto& col : index.columns()) {
        write_string(out, col.table_name);
        write_string(out, col.column_name);
        write_pod<uint64_t>(out, col.cardinality);
        write_pod<uint32_t>(out, col.partition);
        for (uint64_t m : col.minima) write_pod<uint64_t>(out, m);
    }
    if (!out) throw DataError("write failed for index '" + path.string() + "'");
}

LshEnsembleIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index '" + path.string() + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("'" + path.string() + "' is not a lakejoin index");
    }
    const uint32_t version = read_pod<uint32_t>(in);
    if (version != LshEnsembleIndex::kFormatVersion) {
        throw DataError("index version " + std::to_string(version) + " unsupported (expected " +
                        std::to_string(LshEnsembleIndex::kFormatVersion) + ")");
    }
    const uint64_t seed = read_pod<uint64_t>(in);
    const uint32_t num_perm = read_pod<uint32_t>(in);
    const uint32_t num_partitions = read_pod<uint32_t>(in);
    const double threshold = read_pod<double>(in);
    const uint32_t n_columns = read_pod<uint32_t>(in);
    std::vector<LshEnsembleIndex::ColumnEntry> columns;
    columns.reserve(n_columns);
    for (uint32_t i = 0; i < n_columns; ++i) {
        LshEnsembleIndex::ColumnEntry ce;
        ce.table_name = read_string(in);
        ce.column_name = read_string(in);
        ce.cardinality = read_pod<uint64_t>(in);
        ce.partition = read_pod<uint32_t>(in);
        ce.minima.resize(num_perm);
        for (uint32_t j = 0; j < num_perm; ++j) ce.minima[j] = read_pod<uint64_t>(in);
        columns.push_back(std::move(ce));
    }
    return LshEnsembleIndex(seed, static_cast<int>(num_perm), static_cast<int>(num_partitions),
                            threshold, std::move(columns));
}

}  // namespace lakejoin
