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
#include <string>
#include <unordered_set>
#include <vector>

#include "lakejoin/common.hpp"

namespace lakejoin {

/// MinHash signature of a key set under num_perm universal-hash
/// permutations (a*x+b mod 2^61-1, coefficients drawn from the seed).
/// Empty sets sketch to all-UINT64_MAX minima.
struct MinHashSketch {
    uint64_t seed = 0;
    int num_perm = 256;
    std::vector<uint64_t> minima;
    std::size_t set_cardinality = 0;
};

MinHashSketch sketch_keys(const std::unordered_set<std::string>& keys, uint64_t seed,
                          int num_perm);

/// Fraction of agreeing minima: unbiased Jaccard similarity estimate.
double estimate_jaccard(const MinHashSketch& a, const MinHashSketch& b);

/// Containment |A∩B|/|A| from the Jaccard estimate and the two exact
/// cardinalities, clamped to [0,1].
double estimate_containment(const MinHashSketch& query, const MinHashSketch& candidate);

/// Sketch of the union: elementwise minima (seeds/num_perm must match).
MinHashSketch sketch_union(const MinHashSketch& a, const MinHashSketch& b);

}  // namespace lakejoin
