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
#include "lakejoin/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "lakejoin/model_io.hpp"

namespace lakejoin {

PredictorKind parse_predictor_kind(const std::string& name) {
    if (name == "ridge") return PredictorKind::Ridge;
    if (name == "gbdt") return PredictorKind::GbdtLite;
    throw DataError("unknown predictor '" + name + "'");
}

const char* predictor_kind_name(PredictorKind k) {
    return k == PredictorKind::Ridge ? "ridge" : "gbdt";
}

RidgeConfig::RidgeConfig() {
    for (int i = 0; i < 13; ++i) {
        alpha_grid.push_back(std::pow(10.0, -3.0 + 0.5 * i));
    }
}

void PredictorConfig::validate() const {
    for (double a : ridge.alpha_grid) {
        if (!(a > 0.0)) throw DataError("ridge alpha grid must be positive");
    }
    if (ridge.alpha_grid.empty()) throw DataError("ridge alpha grid empty");
    if (gbdt.n_iter < 1 || gbdt.early_stop_patience < 1 || gbdt.max_depth < 1 ||
        gbdt.min_samples_leaf < 1 || !(gbdt.learning_rate > 0.0) || !(gbdt.l2 > 0.0)) {
        throw DataError("gbdt hyperparameters must be positive");
    }
    if (gbdt.early_stop_patience > gbdt.n_iter) {
        throw DataError("gbdt patience must not exceed n_iter");
    }
}

void FeatureSchema::check(const Table& table) const {
    for (const auto& [name, dtype] : features) {
        auto idx = table.column_index(name);
        if (!idx) {
            throw DataError("schema mismatch: table lacks feature column '" + name + "'");
        }
        if (table.columns()[*idx].dtype() != dtype) {
            throw DataError("schema mismatch: column '" + name + "' changed dtype");
        }
    }
    for (const Column& col : table.columns()) {
        if (col.name() == target) continue;
        const bool known = std::any_of(features.begin(), features.end(),
                                       [&](const auto& f) { return f.first == col.name(); });
        if (!known) {
            throw DataError("schema mismatch: unexpected column '" + col.name() + "'");
        }
    }
}

MetricKind default_metric(Task task) {
    return task == Task::Regression ? MetricKind::R2 : MetricKind::AUC;
}

double r2_score(const std::vector<double>& predictions, const std::vector<double>& truth) {
    if (predictions.size() != truth.size() || truth.empty()) {
        throw DataError("r2_score: size mismatch or empty input");
    }
    double mean = 0.0;
    for (double y : truth) mean += y;
    mean /= static_cast<double>(truth.size());
    double ss_tot = 0.0;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ss_tot += (truth[i] - mean) * (truth[i] - mean);
        ss_res += (truth[i] - predictions[i]) * (truth[i] - predictions[i]);
    }
    if (ss_tot == 0.0) throw DataError("r2_score: constant target");
    return 1.0 - ss_res / ss_tot;
}

double auc_score(const std::vector<double>& scores, const std::vector<double>& labels01) {
    if (scores.size() != labels01.size() || scores.empty()) {
        throw DataError("auc_score: size mismatch or empty input");
    }
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::size_t n_pos = 0;
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (labels01[order[k]] > 0.5) {
                rank_sum_pos += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("auc_score: single-class target");
    return (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<double> extract_target(const Table& table, const std::string& target, Task task,
                                   std::vector<std::string>* class_labels) {
    const Column& col = table.column(target);
    std::vector<double> y(table.num_rows(), std::numeric_limits<double>::quiet_NaN());
    if (task == Task::Regression) {
        if (col.dtype() != Dtype::Numeric) {
            throw DataError("regression target '" + target + "' must be numeric");
        }
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (!col.at(r).is_null()) y[r] = col.at(r).as_number();
        }
        return y;
    }

    std::vector<std::string> labels;
    if (class_labels != nullptr && !class_labels->empty()) {
        labels = *class_labels;  // replay the fitted mapping
    } else {
        auto distinct = distinct_values(col);
        if (distinct.size() != 2) {
            throw DataError("classification target '" + target + "' must have exactly 2 classes, found " +
                            std::to_string(distinct.size()));
        }
        labels.assign(distinct.begin(), distinct.end());
        std::sort(labels.begin(), labels.end());
    }
    for (std::size_t r = 0; r < col.size(); ++r) {
        if (col.at(r).is_null()) continue;
        const std::string key = canonical_key(col.at(r));
        if (key == labels[0]) {
            y[r] = 0.0;
        } else if (key == labels[1]) {
            y[r] = 1.0;
        } else {
            throw DataError("classification target holds unseen class '" + key + "'");
        }
    }
    if (class_labels != nullptr && class_labels->empty()) *class_labels = labels;
    return y;
}

Metric score(const FittedModel& model, const Table& table, const std::string& target,
             MetricKind kind) {
    std::vector<std::string> labels = model.schema().class_labels;
    std::vector<double> y = extract_target(table, target, model.schema().task,
                                           labels.empty() ? nullptr : &labels);
    const std::vector<double> preds = model.predict(table);

    std::vector<double> yv;
    std::vector<double> pv;
    for (std::size_t r = 0; r < y.size(); ++r) {
        if (std::isnan(y[r])) continue;
        yv.push_back(y[r]);
        pv.push_back(preds[r]);
    }
    Metric m;
    m.kind = kind;
    m.value = kind == MetricKind::R2 ? r2_score(pv, yv) : auc_score(pv, yv);
    return m;
}

// Defined in ridge.cpp / gbdt.cpp.
std::unique_ptr<FittedModel> fit_ridge_model(const PredictorConfig& config, const Table& table,
                                             const std::string& target);
std::unique_ptr<FittedModel> fit_gbdt_model(const PredictorConfig& config, const Table& table,
                                            const std::string& target);
std::unique_ptr<FittedModel> deserialize_ridge(std::istream& in);
std::unique_ptr<FittedModel> deserialize_gbdt(std::istream& in);

std::unique_ptr<FittedModel> fit_model(const PredictorConfig& config, const Table& table,
                                       const std::string& target) {
    config.validate();
    if (!table.has_column(target)) {
        throw DataError("fit_model: table lacks target column '" + target + "'");
    }
    if (config.kind == PredictorKind::Ridge) return fit_ridge_model(config, table, target);
    return fit_gbdt_model(config, table, target);
}

namespace {
constexpr char kModelMagic[4] = {'L', 'J', 'M', 'D'};
constexpr uint32_t kModelVersion = 1;
}  // namespace

void save_model(const FittedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model '" + path.string() + "'");
    out.write(kModelMagic, 4);
    io::write_pod<uint32_t>(out, kModelVersion);
    io::write_pod<uint8_t>(out, model.kind() == PredictorKind::Ridge ? 0 : 1);
    model.serialize(out);
    if (!out) throw DataError("write failed for model '" + path.string() + "'");
}

std::unique_ptr<FittedModel> load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model '" + path.string() + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kModelMagic, 4) != 0) {
        throw DataError("'" + path.string() + "' is not a lakejoin model");
    }
    const uint32_t version = io::read_pod<uint32_t>(in);
    if (version != kModelVersion) {
        throw DataError("model version " + std::to_string(version) + " unsupported");
    }
    const uint8_t kind = io::read_pod<uint8_t>(in);
    if (kind == 0) return deserialize_ridge(in);
    if (kind == 1) return deserialize_gbdt(in);
    throw DataError("model file holds unknown predictor kind");
}

}  // namespace lakejoin
