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
#include <optional>
#include <string>
#include <vector>

#include "lakejoin/aggregate.hpp"
#include "lakejoin/catalog.hpp"
#include "lakejoin/metering.hpp"
#include "lakejoin/predictor.hpp"
#include "lakejoin/retrieval.hpp"

namespace lakejoin {

enum class SelectorKind { HighestContainment, BestSingle, FullJoin, StepwiseGreedy };

SelectorKind parse_selector(const std::string& name);
const char* selector_name(SelectorKind k);

/// One accepted join: which lake column joins onto which base column.
struct JoinStep {
    std::string table_name;
    std::string column_name;
    std::string base_key;
};

/// Ordered, deterministic recipe for rebuilding the augmented table.
struct MergePlan {
    std::string selector;
    AggregationPolicy aggregation = AggregationPolicy::Any;
    std::string query_column;
    std::string target_column;
    std::vector<JoinStep> steps;
};

/// Aggregates and left-joins every plan step onto `base`, in order.
/// Candidate feature columns named like the target are dropped (leakage
/// guard). Byte-identical on identical inputs.
Table replay_plan(const MergePlan& plan, const Table& base, const LakeCatalog& lake,
                  MemoryMeter* meter = nullptr);

/// Human-readable plan record for `augment --plan FILE`.
void save_plan(const MergePlan& plan, const std::filesystem::path& path);
MergePlan load_plan(const std::filesystem::path& path);

struct StageTimings {
    double prepare = 0.0;
    double train_join = 0.0;
    double train_model = 0.0;
    double predict_join = 0.0;
    double predict_model = 0.0;

    double total() const {
        return prepare + train_join + train_model + predict_join + predict_model;
    }
};

struct SelectorInput {
    const Table* base_train = nullptr;  // outer-train slice of the base table
    std::string query_column;
    std::string target_column;
    std::vector<CandidateJoin> candidates;  // retrieval order
    const LakeCatalog* lake = nullptr;
    AggregationPolicy aggregation = AggregationPolicy::Any;
    PredictorConfig predictor;
    double inner_train_fraction = 0.8;  // remaining 0.2 validates
    uint64_t seed = 0;
    int max_iter = 30;  // stepwise greedy budget
    MemoryMeter* meter = nullptr;

    void validate() const;
};

struct SelectorOutcome {
    MergePlan plan;
    /// Validation score per evaluated candidate, in evaluation order;
    /// empty for selectors that never train during selection.
    std::vector<std::pair<std::string, double>> candidate_scores;
    /// Baseline validation score (selectors that measure it).
    std::optional<double> baseline_score;
    /// Accepted-iteration validation scores (stepwise greedy).
    std::vector<double> accepted_scores;
    int model_fits = 0;
    int untested_candidates = 0;  // stepwise budget exhaustion
    StageTimings timings;
    Table augmented_train;               // full train split after the plan
    std::unique_ptr<FittedModel> model;  // final model, fit on augmented_train
};

/// Re-ranks by exact containment (ignoring incoming ranks) and joins only
/// the top candidate; trains nothing during selection.
SelectorOutcome select_highest_containment(const SelectorInput& in);

/// Fits one model per candidate on the inner split, keeps the best
/// validation score, then refits on the whole training split.
SelectorOutcome select_best_single(const SelectorInput& in);

/// Joins every candidate in retrieval order and trains once.
SelectorOutcome select_full_join(const SelectorInput& in);

/// Greedy forward selection: keep a candidate iff it strictly improves the
/// inner-validation score; rejoin retained candidates and refit at the end.
SelectorOutcome select_stepwise_greedy(const SelectorInput& in);

SelectorOutcome run_selector(SelectorKind kind, const SelectorInput& in);

}  // namespace lakejoin
