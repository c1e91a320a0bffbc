/*
 * Copyright 2026 The CGP Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Deterministic fork-join helpers. Work item i always writes slot i and
// reductions run in index order, so results do not depend on thread count.

#ifndef CGP_PARALLEL_H_
#define CGP_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cgp {

// Number of worker threads used when a caller passes 0.
int DefaultThreadCount();
void SetDefaultThreadCount(int threads);

// Runs fn(i) for i in [0, n). The first exception thrown by any item is
// rethrown after all workers join.
void ParallelFor(size_t n, const std::function<void(size_t)>& fn,
                 int threads = 0);

// SplitMix64 finalizer; derives independent child seeds from (seed, index).
uint64_t MixSeed(uint64_t seed, uint64_t index);

}  // namespace cgp

#endif  // CGP_PARALLEL_H_
