/*
 * Copyright 2026 The ultr Authors.
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

#ifndef ULTR_PARALLEL_H_
#define ULTR_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace ultr {

// Global worker cap. Defaults to $ULTR_NUM_THREADS when set, otherwise the
// OpenMP default. Every parallel loop in the library assigns work statically
// and reduces in a fixed order, so results never depend on this value.
void SetNumThreads(int n);
int NumThreads();

// Runs fn(i) for i in [0, n) across the worker pool.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ultr

#endif  // ULTR_PARALLEL_H_
