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

#include <optional>
#include <string>
#include <vector>

#include "lakejoin/selectors.hpp"

namespace lakejoin {

struct ExperimentConfig {
    std::string lake_path;
    std::string base_table_path;
    std::string query_column;
    std::string target_column;
    Task task = Task::Regression;
    RetrievalMethod retrieval = RetrievalMethod::Exact;
    SelectorKind selector = SelectorKind::BestSingle;
    AggregationPolicy aggregation = AggregationPolicy::Any;
    PredictorKind predictor = PredictorKind::GbdtLite;
    int top_k = 30;
    int n_outer_folds = 5;
    double inner_train_fraction = 0.8;
    double threshold = 0.2;  // minhash/hybrid
    int max_iter = 30;       // stepwise greedy budget
    uint64_t seed = 0;

    /// "exact/best_single/any/gbdt/k30/s0" - the grouping key in reports.
    std::string config_id() const;
    void validate() const;
};

/// The paper-style fixed baseline every ablation compares against.
struct ReferenceConfig {
    RetrievalMethod retrieval = RetrievalMethod::Exact;
    SelectorKind selector = SelectorKind::BestSingle;
    AggregationPolicy aggregation = AggregationPolicy::Any;
    PredictorKind predictor = PredictorKind::GbdtLite;
};

struct EvalRecord {
    ExperimentConfig config;
    int fold = 0;
    double metric = 0.0;
    bool flagged = false;      // e.g. retrieval came back empty
    std::string flag_reason;
    StageTimings timings;
    std::size_t peak_bytes = 0;
    int candidate_count = 0;
    double mean_containment = 0.0;
};

/// Base table reduced to [key, target], isolating what joins add.
Table deplete(const Table& base, const std::string& key, const std::string& target);

/// Contiguous blocks of a seeded shuffle; sizes differ by at most one.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int k, uint64_t seed);

/// Resolved inputs for a run: the runner itself never touches the
/// filesystem, so tests can drive it with in-memory fixtures.
struct ExperimentEnv {
    const Table* base = nullptr;
    const LakeCatalog* lake = nullptr;
    const LshEnsembleIndex* index = nullptr;  // required for minhash/hybrid
};

/// One EvalRecord per outer fold. Retrieval sees only the train-split key
/// set of each fold; a fold whose retrieval returns zero candidates yields
/// a flagged baseline-only record instead of failing.
std::vector<EvalRecord> run_experiment(const ExperimentConfig& cfg, const ExperimentEnv& env);

/// Loads base/lake from cfg paths and builds the index when needed.
struct LoadedInputs {
    Table base;
    LakeCatalog lake;
    std::optional<LshEnsembleIndex> index;

    ExperimentEnv env() const {
        return ExperimentEnv{&base, &lake, index ? &*index : nullptr};
    }
};
LoadedInputs load_experiment_inputs(const ExperimentConfig& cfg);

/// Declarative key=value experiment file; comma-separated values in
/// retrieval/selector/aggregation/predictor/seed/top_k expand to the cross
/// product, in file order.
std::vector<ExperimentConfig> parse_experiment_text(const std::string& text);
std::vector<ExperimentConfig> parse_experiment_file(const std::filesystem::path& path);

/// Full-join sweep over candidate budgets (per the plateau analysis).
std::vector<EvalRecord> topk_sweep(const ExperimentConfig& cfg, const std::vector<int>& k_values,
                                   const ExperimentEnv& env);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct AblationRow {
    std::string dimension;  // retrieval | selector | aggregation | predictor
    std::string method;
    double median_diff_pct = 0.0;    // fold-vs-fold prediction diff, percent
    double median_time_ratio = 1.0;  // fold-vs-fold total-time ratio
    int pairs = 0;
};

/// Fold-vs-fold medians versus the reference configuration, one row per
/// (dimension, method) present in the records. Raises when the reference
/// itself is missing.
std::vector<AblationRow> ablation_report(const std::vector<EvalRecord>& records,
                                         const ReferenceConfig& reference);

struct ParetoRow {
    std::string config_id;
    double mean_metric = 0.0;
    double mean_total_seconds = 0.0;
    std::size_t peak_bytes = 0;
    bool pareto_time = false;   // non-dominated in (metric up, time down)
    bool pareto_bytes = false;  // non-dominated in (metric up, bytes down)
};

std::vector<ParetoRow> pareto_report(const std::vector<EvalRecord>& records);

/// CSV emission. `include_timings=false` drops wall-clock columns, giving
/// the byte-stable form used by the determinism checks.
std::string records_csv(const std::vector<EvalRecord>& records, bool include_timings = true);
std::string pareto_csv(const std::vector<ParetoRow>& rows);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace lakejoin
