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
#include "lakejoin/ridge.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "lakejoin/model_io.hpp"
#include "lakejoin/predictor.hpp"

namespace lakejoin {

RidgeSolution ridge_solve(const DesignMatrix& X, const std::vector<double>& y,
                          const std::vector<double>& alpha_grid) {
    const std::size_t n = X.rows;
    const std::size_t d = X.cols;
    if (n < 2) throw DataError("ridge: need at least 2 samples");
    if (d < 1) throw DataError("ridge: need at least 1 feature");
    if (y.size() != n) throw DataError("ridge: target length mismatch");
    if (alpha_grid.empty()) throw DataError("ridge: empty alpha grid");

    Eigen::MatrixXd A(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) A(r, c) = X.at(r, c);
    }
    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

    const Eigen::RowVectorXd col_means = A.colwise().mean();
    const double y_mean = yv.mean();
    A.rowwise() -= col_means;
    yv.array() -= y_mean;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd& U = svd.matrixU();
    const Eigen::MatrixXd& V = svd.matrixV();
    const Eigen::VectorXd& s = svd.singularValues();
    const Eigen::VectorXd uty = U.transpose() * yv;

    double best_gcv = std::numeric_limits<double>::infinity();
    double best_alpha = alpha_grid.front();
    for (double alpha : alpha_grid) {
        double rss = yv.squaredNorm() - uty.squaredNorm();  // component outside col(U)
        double df = 1.0;                                    // intercept
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            const double s2 = s(i) * s(i);
            const double f = s2 / (s2 + alpha);
            df += f;
            const double resid = (1.0 - f) * uty(i);
            rss += resid * resid;
        }
        if (rss < 0.0) rss = 0.0;
        const double denom = static_cast<double>(n) - df;
        if (denom <= 0.0) continue;
        const double gcv = static_cast<double>(n) * rss / (denom * denom);
        if (gcv < best_gcv) {
            best_gcv = gcv;
            best_alpha = alpha;
        }
    }

    Eigen::VectorXd shrink(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        shrink(i) = s(i) / (s(i) * s(i) + best_alpha);
    }
    const Eigen::VectorXd w = V * shrink.cwiseProduct(uty);

    RidgeSolution sol;
    sol.weights.assign(w.data(), w.data() + w.size());
    sol.intercept = y_mean - col_means.dot(w);
    sol.alpha = best_alpha;
    return sol;
}

// ---------------------------------------------------------------------------
// Table-level model
// ---------------------------------------------------------------------------

namespace {

class RidgeModel final : public FittedModel {
public:
    RidgeModel(FeatureSchema schema, EncoderState encoder, RidgeSolution sol)
        : schema_(std::move(schema)), encoder_(std::move(encoder)), sol_(std::move(sol)) {}

    std::vector<double> predict(const Table& table) const override {
        schema_.check(table);
        const DesignMatrix X = apply_encoder(encoder_, table);
        std::vector<double> out(X.rows, sol_.intercept);
        for (std::size_t r = 0; r < X.rows; ++r) {
            double acc = sol_.intercept;
            for (std::size_t c = 0; c < X.cols; ++c) acc += X.at(r, c) * sol_.weights[c];
            out[r] = acc;
        }
        return out;
    }

    const FeatureSchema& schema() const override { return schema_; }
    PredictorKind kind() const override { return PredictorKind::Ridge; }

    void serialize(std::ostream& out) const override {
        io::write_pod<uint8_t>(out, schema_.task == Task::Regression ? 0 : 1);
        io::write_string(out, schema_.target);
        io::write_pod<uint32_t>(out, static_cast<uint32_t>(schema_.features.size()));
        for (const auto& [name, dtype] : schema_.features) {
            io::write_string(out, name);
            io::write_pod<uint8_t>(out, dtype == Dtype::Numeric ? 0 : 1);
        }
        io::write_pod<uint32_t>(out, static_cast<uint32_t>(schema_.class_labels.size()));
        for (const auto& l : schema_.class_labels) io::write_string(out, l);

        io::write_pod<uint32_t>(out, static_cast<uint32_t>(encoder_.columns.size()));
        for (const auto& enc : encoder_.columns) {
            io::write_string(out, enc.column);
            io::write_pod<uint8_t>(out, static_cast<uint8_t>(enc.kind));
            io::write_pod<double>(out, enc.impute_mean);
            io::write_pod<uint32_t>(out, static_cast<uint32_t>(enc.levels.size()));
            for (const auto& l : enc.levels) io::write_string(out, l);
            io::write_pod<uint32_t>(out, static_cast<uint32_t>(enc.target_means.size()));
            for (const auto& [k, v] : enc.target_means) {
                io::write_string(out, k);
                io::write_pod<double>(out, v);
            }
            io::write_pod<double>(out, enc.null_mean);
            io::write_pod<double>(out, enc.global_mean);
        }
        io::write_pod<uint32_t>(out, static_cast<uint32_t>(encoder_.feature_names.size()));
        for (const auto& f : encoder_.feature_names) io::write_string(out, f);

        io::write_doubles(out, sol_.weights);
        io::write_pod<double>(out, sol_.intercept);
        io::write_pod<double>(out, sol_.alpha);
    }

private:
    FeatureSchema schema_;
    EncoderState encoder_;
    RidgeSolution sol_;
};

}  // namespace

std::unique_ptr<FittedModel> fit_ridge_model(const PredictorConfig& config, const Table& table,
                                             const std::string& target);

std::unique_ptr<FittedModel> fit_ridge_model(const PredictorConfig& config, const Table& table,
                                             const std::string& target) {
    FeatureSchema schema;
    schema.target = target;
    schema.task = config.task;
    for (const Column& col : table.columns()) {
        if (col.name() == target) continue;
        schema.features.emplace_back(col.name(), col.dtype());
    }

    std::vector<double> y = extract_target(table, target, config.task, &schema.class_labels);
    std::size_t n_fit = 0;
    for (double v : y) n_fit += std::isnan(v) ? 0 : 1;
    if (n_fit == 0) throw DataError("ridge: target column is all null");

    EncoderState encoder = fit_encoder(table, target, y);
    const DesignMatrix full = apply_encoder(encoder, table);

    DesignMatrix X;
    X.rows = n_fit;
    X.cols = full.cols;
    X.values.reserve(n_fit * full.cols);
    std::vector<double> yfit;
    yfit.reserve(n_fit);
    for (std::size_t r = 0; r < full.rows; ++r) {
        if (std::isnan(y[r])) continue;
        for (std::size_t c = 0; c < full.cols; ++c) X.values.push_back(full.at(r, c));
        // classification trains on {-1,+1} with decision threshold 0
        yfit.push_back(config.task == Task::Regression ? y[r] : 2.0 * y[r] - 1.0);
    }

    RidgeSolution sol = ridge_solve(X, yfit, config.ridge.alpha_grid);
    return std::make_unique<RidgeModel>(std::move(schema), std::move(encoder), std::move(sol));
}

std::unique_ptr<FittedModel> deserialize_ridge(std::istream& in);

std::unique_ptr<FittedModel> deserialize_ridge(std::istream& in) {
    FeatureSchema schema;
    schema.task = io::read_pod<uint8_t>(in) == 0 ? Task::Regression : Task::BinaryClassification;
    schema.target = io::read_string(in);
    const uint32_t n_features = io::read_pod<uint32_t>(in);
    for (uint32_t i = 0; i < n_features; ++i) {
        std::string name = io::read_string(in);
        const Dtype dtype = io::read_pod<uint8_t>(in) == 0 ? Dtype::Numeric : Dtype::Categorical;
        schema.features.emplace_back(std::move(name), dtype);
    }
    const uint32_t n_labels = io::read_pod<uint32_t>(in);
    for (uint32_t i = 0; i < n_labels; ++i) schema.class_labels.push_back(io::read_string(in));

    EncoderState encoder;
    const uint32_t n_cols = io::read_pod<uint32_t>(in);
    for (uint32_t i = 0; i < n_cols; ++i) {
        ColumnEncoder enc;
        enc.column = io::read_string(in);
        enc.kind = static_cast<ColumnEncoder::Kind>(io::read_pod<uint8_t>(in));
        enc.impute_mean = io::read_pod<double>(in);
        const uint32_t n_levels = io::read_pod<uint32_t>(in);
        for (uint32_t j = 0; j < n_levels; ++j) enc.levels.push_back(io::read_string(in));
        const uint32_t n_means = io::read_pod<uint32_t>(in);
        for (uint32_t j = 0; j < n_means; ++j) {
            std::string k = io::read_string(in);
            enc.target_means[k] = io::read_pod<double>(in);
        }
        enc.null_mean = io::read_pod<double>(in);
        enc.global_mean = io::read_pod<double>(in);
        encoder.columns.push_back(std::move(enc));
    }
    const uint32_t n_names = io::read_pod<uint32_t>(in);
    for (uint32_t i = 0; i < n_names; ++i) encoder.feature_names.push_back(io::read_string(in));

    RidgeSolution sol;
    sol.weights = io::read_doubles(in);
    sol.intercept = io::read_pod<double>(in);
    sol.alpha = io::read_pod<double>(in);
    return std::make_unique<RidgeModel>(std::move(schema), std::move(encoder), std::move(sol));
}

}  // namespace lakejoin
