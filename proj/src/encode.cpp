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
#include "lakejoin/encode.hpp"

#include <algorithm>
#include <cmath>

namespace lakejoin {

EncoderState fit_encoder(const Table& table, const std::string& target,
                         const std::vector<double>& target_values) {
    if (target_values.size() != table.num_rows()) {
        throw DataError("fit_encoder: target values misaligned with table rows");
    }
    double global_sum = 0.0;
    std::size_t global_n = 0;
    for (double y : target_values) {
        if (!std::isnan(y)) {
            global_sum += y;
            ++global_n;
        }
    }
    const double global_mean = global_n ? global_sum / static_cast<double>(global_n) : 0.0;

    EncoderState state;
    for (const Column& col : table.columns()) {
        if (col.name() == target) continue;
        ColumnEncoder enc;
        enc.column = col.name();
        if (col.dtype() == Dtype::Numeric) {
            enc.kind = ColumnEncoder::Kind::NumericImpute;
            double sum = 0.0;
            std::size_t n = 0;
            for (const Cell& c : col.cells()) {
                if (!c.is_null()) {
                    sum += c.as_number();
                    ++n;
                }
            }
            enc.impute_mean = n ? sum / static_cast<double>(n) : 0.0;
            state.feature_names.push_back(col.name());
            state.feature_names.push_back(col.name() + "__missing");
        } else {
            auto levels = distinct_values(col);
            if (levels.size() <= EncoderState::kOneHotCutoff) {
                enc.kind = ColumnEncoder::Kind::OneHot;
                enc.levels.assign(levels.begin(), levels.end());
                std::sort(enc.levels.begin(), enc.levels.end());
                for (const auto& l : enc.levels) {
                    state.feature_names.push_back(col.name() + "=" + l);
                }
                state.feature_names.push_back(col.name() + "=__null");
            } else {
                enc.kind = ColumnEncoder::Kind::TargetMean;
                enc.global_mean = global_mean;
                struct Acc {
                    double sum = 0.0;
                    std::size_t n = 0;
                };
                std::map<std::string, Acc> acc;
                Acc null_acc;
                for (std::size_t r = 0; r < col.size(); ++r) {
                    const double y = target_values[r];
                    if (std::isnan(y)) continue;
                    if (col.at(r).is_null()) {
                        null_acc.sum += y;
                        ++null_acc.n;
                    } else {
                        Acc& a = acc[canonical_key(col.at(r))];
                        a.sum += y;
                        ++a.n;
                    }
                }
                const double w = EncoderState::kSmoothingWeight;
                for (const auto& [key, a] : acc) {
                    enc.target_means[key] =
                        (a.sum + w * global_mean) / (static_cast<double>(a.n) + w);
                }
                enc.null_mean = (null_acc.sum + w * global_mean) /
                                (static_cast<double>(null_acc.n) + w);
                state.feature_names.push_back(col.name() + "__target_enc");
            }
        }
        state.columns.push_back(std::move(enc));
    }
    return state;
}

DesignMatrix apply_encoder(const EncoderState& state, const Table& table) {
    DesignMatrix m;
    m.rows = table.num_rows();
    m.cols = state.feature_names.size();
    m.values.assign(m.rows * m.cols, 0.0);

    std::size_t base = 0;
    for (const ColumnEncoder& enc : state.columns) {
        const Column& col = table.column(enc.column);
        switch (enc.kind) {
            case ColumnEncoder::Kind::NumericImpute: {
                if (col.dtype() != Dtype::Numeric) {
                    throw DataError("encoder: column '" + enc.column + "' is no longer numeric");
                }
                for (std::size_t r = 0; r < m.rows; ++r) {
                    const Cell& c = col.at(r);
                    m.at(r, base) = c.is_null() ? enc.impute_mean : c.as_number();
                    m.at(r, base + 1) = c.is_null() ? 1.0 : 0.0;
                }
                base += 2;
                break;
            }
            case ColumnEncoder::Kind::OneHot: {
                for (std::size_t r = 0; r < m.rows; ++r) {
                    const Cell& c = col.at(r);
                    if (c.is_null()) {
                        m.at(r, base + enc.levels.size()) = 1.0;
                        continue;
                    }
                    const std::string key = canonical_key(c);
                    auto it = std::lower_bound(enc.levels.begin(), enc.levels.end(), key);
                    if (it != enc.levels.end() && *it == key) {
                        m.at(r, base + static_cast<std::size_t>(it - enc.levels.begin())) = 1.0;
                    }
                    // unseen level: all-zero row block
                }
                base += enc.levels.size() + 1;
                break;
            }
            case ColumnEncoder::Kind::TargetMean: {
                for (std::size_t r = 0; r < m.rows; ++r) {
                    const Cell& c = col.at(r);
                    double v;
                    if (c.is_null()) {
                        v = enc.null_mean;
                    } else {
                        auto it = enc.target_means.find(canonical_key(c));
                        v = it == enc.target_means.end() ? enc.global_mean : it->second;
                    }
                    m.at(r, base) = v;
                }
                base += 1;
                break;
            }
        }
    }
    return m;
}

}  // namespace lakejoin
