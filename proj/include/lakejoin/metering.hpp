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

#include <atomic>
#include <chrono>
#include <cstddef>

#include "lakejoin/table.hpp"

namespace lakejoin {

/// Peak-bytes tracker: the largest table the pipeline materialized.
/// Stands in for process RSS, which is platform noise at this scale.
class MemoryMeter {
public:
    void observe(const Table& t) { observe_bytes(t.byte_size()); }

    void observe_bytes(std::size_t bytes) {
        std::size_t cur = peak_.load();
        while (bytes > cur && !peak_.compare_exchange_weak(cur, bytes)) {
        }
    }

    std::size_t peak_bytes() const { return peak_.load(); }

private:
    std::atomic<std::size_t> peak_{0};
};

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}

    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace lakejoin
