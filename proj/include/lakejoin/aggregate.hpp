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

#include <string>

#include "lakejoin/common.hpp"
#include "lakejoin/table.hpp"

namespace lakejoin {

enum class AggregationPolicy { Any, Mean, DFS };

AggregationPolicy parse_aggregation(const std::string& name);
const char* aggregation_name(AggregationPolicy p);

/// Collapses one-to-many groups to one row per distinct non-null join-key
/// value (first-appearance order).
///
///   Any  -> first row of the group in stable input order
///   Mean -> numeric: mean over non-null values; categorical: mode with
///           lexicographic-smallest tie-break; all-null groups stay null
///   DFS  -> per numeric column {mean,min,max,sum,std,count}, per
///           categorical column {mode,nunique,count}; std of one value is
///           null, count counts non-null cells, all-null groups yield null
///           stats (count 0)
///
/// An all-null join-key column raises DataError.
Table aggregate(const Table& candidate, const std::string& join_key, AggregationPolicy policy);

/// "Any" with the paper's random row pick instead of first-in-group;
/// deterministic given the RNG state. Fidelity mode only.
Table aggregate_any_random(const Table& candidate, const std::string& join_key, Rng& rng);

/// Left join preserving the base row count. `right` must have unique
/// non-null right_key values (i.e. be aggregated) or DataError is raised.
/// Incoming columns drop the right key and are renamed
/// `<right-table>__<col>` when the name is already taken.
Table left_join(const Table& base, const Table& right, const std::string& base_key,
                const std::string& right_key);

}  // namespace lakejoin
