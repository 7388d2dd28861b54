// Copyright 2026 The cfm-workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CFM_NN_THREAD_POOL_HPP_
#define CFM_NN_THREAD_POOL_HPP_

#include <cstdint>
#include <functional>

namespace cfm::nn {

// Worker count used by parallel_for. Resolution order: set_threads() (CLI),
// CFM_THREADS env var, hardware concurrency.
void set_threads(int n);
int thread_count();

// Splits [0, n) into contiguous chunks, one per worker, and runs
// fn(begin, end) on each. Every index is processed by exactly one worker, so
// results are bit-identical for any thread count as long as fn writes only
// to its own index range.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

// As parallel_for, but stays on the calling thread when the estimated total
// work is too small to amortize a thread spawn.
void parallel_for_work(int64_t n, int64_t total_work,
                       const std::function<void(int64_t, int64_t)>& fn);

}  // namespace cfm::nn

#endif  // CFM_NN_THREAD_POOL_HPP_
