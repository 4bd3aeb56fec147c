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

#include <vector>

#include "lakejoin/encode.hpp"

namespace lakejoin {

struct RidgeSolution {
    std::vector<double> weights;
    double intercept = 0.0;
    double alpha = 0.0;  // grid point selected by generalized CV
};

/// Closed-form ridge on centered data, one SVD shared across the alpha
/// grid; alpha picked by minimizing the generalized cross-validation
/// error. Requires >= 2 rows and >= 1 feature.
RidgeSolution ridge_solve(const DesignMatrix& X, const std::vector<double>& y,
                          const std::vector<double>& alpha_grid);

}  // namespace lakejoin
