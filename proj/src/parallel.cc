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

#include "ultr/parallel.h"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace ultr {
namespace {

int InitialThreads() {
  if (const char* env = std::getenv("ULTR_NUM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  return omp_get_max_threads();
}

int& ThreadCap() {
  static int cap = InitialThreads();
  return cap;
}

}  // namespace

void SetNumThreads(int n) { ThreadCap() = n < 1 ? 1 : n; }

int NumThreads() { return ThreadCap(); }

void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int threads = NumThreads();
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long long i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
}

}  // namespace ultr
