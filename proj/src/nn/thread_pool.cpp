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

#include "cfm/nn/thread_pool.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace cfm::nn {

namespace {

int resolve_default() {
  if (const char* env = std::getenv("CFM_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int& thread_setting() {
  static int n = resolve_default();
  return n;
}

}  // namespace

void set_threads(int n) { thread_setting() = std::max(1, n); }

int thread_count() { return thread_setting(); }

void parallel_for_work(int64_t n, int64_t total_work,
                       const std::function<void(int64_t, int64_t)>& fn) {
  if (n <= 0) return;
  if (total_work < 1 << 18) {
    fn(0, n);
    return;
  }
  parallel_for(n, fn);
}

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
  if (n <= 0) return;
  int workers = std::min<int64_t>(thread_count(), n);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) {
    int64_t begin = w * chunk;
    int64_t end = std::min<int64_t>(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(0, std::min<int64_t>(n, chunk));
  for (auto& t : threads) t.join();
}

}  // namespace cfm::nn
