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

#include <map>
#include <string>
#include <vector>

#include "lakejoin/table.hpp"

namespace lakejoin {

/// Design-matrix encoder for parametric models. All statistics (imputation
/// means, one-hot vocabularies, target-encoding maps) are learned on the
/// training table only and replay identically on any later table.
///
/// Per column:
///   numeric            -> train-mean imputed value + missingness indicator
///   categorical, <= 32 train levels -> one-hot over the levels + explicit
///                         null category (unseen levels hit the null slot's
///                         all-zero pattern)
///   categorical, > 32 levels -> target-mean encoding smoothed toward the
///                         global mean with weight 10; unseen/null -> that
///                         column's fallback (global mean for unseen)
struct ColumnEncoder {
    enum class Kind { NumericImpute, OneHot, TargetMean };
    std::string column;
    Kind kind = Kind::NumericImpute;
    double impute_mean = 0.0;                 // NumericImpute
    std::vector<std::string> levels;          // OneHot, sorted
    std::map<std::string, double> target_means;  // TargetMean
    double null_mean = 0.0;                   // TargetMean, for null cells
    double global_mean = 0.0;                 // TargetMean fallback
};

struct EncoderState {
    static constexpr std::size_t kOneHotCutoff = 32;
    static constexpr double kSmoothingWeight = 10.0;
    std::vector<ColumnEncoder> columns;
    std::vector<std::string> feature_names;
};

struct DesignMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major
    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Learns the encoder from the table's feature columns (everything except
/// `target`), using the given per-row target values for target-mean
/// encoding (NaN marks rows whose target is null; those rows contribute
/// imputation/vocabulary statistics but not target means).
EncoderState fit_encoder(const Table& table, const std::string& target,
                         const std::vector<double>& target_values);

DesignMatrix apply_encoder(const EncoderState& state, const Table& table);

}  // namespace lakejoin
