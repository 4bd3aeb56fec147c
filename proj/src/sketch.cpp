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
#include "lakejoin/sketch.hpp"

#include <algorithm>

#include "lakejoin/table.hpp"

namespace lakejoin {

namespace {

constexpr uint64_t kMersennePrime = (1ull << 61) - 1;

uint64_t mulmod_p(uint64_t a, uint64_t x) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(a) * x) % kMersennePrime);
}

// Permutation coefficients are a pure function of (seed, num_perm).
struct Permutations {
    std::vector<uint64_t> a;
    std::vector<uint64_t> b;
};

Permutations make_permutations(uint64_t seed, int num_perm) {
    Rng rng(seed ^ 0xA24BAED4963EE407ull);
    Permutations p;
    p.a.reserve(num_perm);
    p.b.reserve(num_perm);
    for (int i = 0; i < num_perm; ++i) {
        p.a.push_back(rng.below(kMersennePrime - 1) + 1);
        p.b.push_back(rng.below(kMersennePrime));
    }
    return p;
}

}  // namespace

MinHashSketch sketch_keys(const std::unordered_set<std::string>& keys, uint64_t seed,
                          int num_perm) {
    if (num_perm < 1) throw DataError("sketch_keys: num_perm must be >= 1");
    MinHashSketch s;
    s.seed = seed;
    s.num_perm = num_perm;
    s.set_cardinality = keys.size();
    s.minima.assign(num_perm, UINT64_MAX);

    const Permutations perms = make_permutations(seed, num_perm);
    for (const std::string& key : keys) {
        const uint64_t h = hash_key(key, seed) % kMersennePrime;
        for (int i = 0; i < num_perm; ++i) {
            const uint64_t v = mulmod_p(perms.a[i], h) + perms.b[i];
            const uint64_t folded = v >= kMersennePrime ? v - kMersennePrime : v;
            if (folded < s.minima[i]) s.minima[i] = folded;
        }
    }
    return s;
}

double estimate_jaccard(const MinHashSketch& a, const MinHashSketch& b) {
    if (a.seed != b.seed || a.num_perm != b.num_perm) {
        throw DataError("estimate_jaccard: sketch seed/num_perm mismatch");
    }
    int matches = 0;
    for (int i = 0; i < a.num_perm; ++i) {
        if (a.minima[i] == b.minima[i]) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(a.num_perm);
}

double estimate_containment(const MinHashSketch& query, const MinHashSketch& candidate) {
    if (query.set_cardinality == 0) {
        throw DataError("estimate_containment: empty query set");
    }
    const double j = estimate_jaccard(query, candidate);
    const double x = static_cast<double>(query.set_cardinality);
    const double y = static_cast<double>(candidate.set_cardinality);
    const double t = j * (x + y) / (x * (1.0 + j));
    return std::clamp(t, 0.0, 1.0);
}

MinHashSketch sketch_union(const MinHashSketch& a, const MinHashSketch& b) {
    if (a.seed != b.seed || a.num_perm != b.num_perm) {
        throw DataError("sketch_union: sketch seed/num_perm mismatch");
    }
    MinHashSketch u = a;
    for (int i = 0; i < a.num_perm; ++i) u.minima[i] = std::min(a.minima[i], b.minima[i]);
    // Union cardinality is not derivable from sketches; callers supply it
    // when they need the exact value.
    u.set_cardinality = 0;
    return u;
}

}  // namespace lakejoin
