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
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lakejoin/table.hpp"

namespace lakejoin {

enum class Task { Regression, BinaryClassification };
enum class PredictorKind { Ridge, GbdtLite };

PredictorKind parse_predictor_kind(const std::string& name);
const char* predictor_kind_name(PredictorKind k);

struct RidgeConfig {
    // 13 log-spaced alphas in [1e-3, 1e3]; selection by generalized CV.
    std::vector<double> alpha_grid;
    RidgeConfig();
};

struct GbdtConfig {
    int n_iter = 300;
    int early_stop_patience = 10;
    double learning_rate = 0.1;
    int max_depth = 6;
    double l2 = 0.01;
    int min_samples_leaf = 20;
    double holdout_fraction = 0.1;  // internal early-stopping split
};

struct PredictorConfig {
    PredictorKind kind = PredictorKind::GbdtLite;
    Task task = Task::Regression;
    RidgeConfig ridge;
    GbdtConfig gbdt;
    uint64_t seed = 0;

    void validate() const;
};

/// Column names + dtypes the model was trained on; prediction rejects
/// tables that do not carry exactly these feature columns (the target
/// column may or may not be present).
struct FeatureSchema {
    std::vector<std::pair<std::string, Dtype>> features;
    std::string target;
    Task task = Task::Regression;
    std::vector<std::string> class_labels;  // canonical keys, classification only

    void check(const Table& table) const;
};

class FittedModel {
public:
    virtual ~FittedModel() = default;

    /// Per-row scores: predicted value (regression) or positive-class
    /// probability/score (classification). Validates the schema first.
    virtual std::vector<double> predict(const Table& table) const = 0;

    virtual const FeatureSchema& schema() const = 0;
    virtual PredictorKind kind() const = 0;
    virtual void serialize(std::ostream& out) const = 0;
};

std::unique_ptr<FittedModel> fit_model(const PredictorConfig& config, const Table& table,
                                       const std::string& target);

/// Versioned binary model files for plan replay (`predict --model FILE`).
void save_model(const FittedModel& model, const std::filesystem::path& path);
std::unique_ptr<FittedModel> load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

enum class MetricKind { R2, AUC };

struct Metric {
    MetricKind kind = MetricKind::R2;
    double value = 0.0;
};

MetricKind default_metric(Task task);

/// R^2 = 1 - SS_res / SS_tot over the evaluation split; constant targets
/// raise (SS_tot = 0).
double r2_score(const std::vector<double>& predictions, const std::vector<double>& truth);

/// Rank-statistic AUC with average ranks on ties; single-class raises.
double auc_score(const std::vector<double>& scores, const std::vector<double>& labels01);

/// Scores the model on rows whose target is non-null.
Metric score(const FittedModel& model, const Table& table, const std::string& target,
             MetricKind kind);

/// Target extraction shared by fit and score: regression requires a
/// numeric column (values as doubles, NaN for nulls); classification maps
/// the two class labels to {0,1} in sorted-canonical order.
std::vector<double> extract_target(const Table& table, const std::string& target, Task task,
                                   std::vector<std::string>* class_labels);

}  // namespace lakejoin
