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

#ifndef CFM_EVAL_BENCH_HPP_
#define CFM_EVAL_BENCH_HPP_

#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "cfm/eval/episode.hpp"
#include "cfm/model/train.hpp"

namespace cfm::eval {

struct BenchMethod {
  std::string name;
  const model::Checkpoint* ckpt = nullptr;  // null -> random policy
};

struct BenchConfig {
  sim::EnvKind env = sim::EnvKind::kRope;
  std::vector<GoalSpec> goals;
  int episodes = 50;
  int max_steps = 20;
  int n_candidates = 100;
  uint64_t seed = 0;
  bool randomize = false;
  int image_size = 32;
  sim::SimConfig sim;
};

struct BenchCell {
  std::string method;
  std::string goal;
  int n = 0;
  double mean_best = 0.0;
  double std_best = 0.0;
  double mean_final = 0.0;
  double std_final = 0.0;
};

struct BenchTable {
  std::vector<BenchCell> cells;
  nlohmann::json config_echo;
};

// Mean +/- std of the best-over-episode and final-step metric for every
// (method x goal) cell. Episode seeds derive from (seed, method, goal,
// episode index), so the table reproduces bit-exactly. Random goals draw a
// fresh goal per episode.
BenchTable benchmark(const BenchConfig& cfg,
                     const std::vector<BenchMethod>& methods,
                     const std::function<void(const std::string&)>& log = {});

// Ablation grid: every forward-model variant crossed with every similarity,
// each trained on the dataset then benchmarked, plus a random-policy row.
// Defaults reproduce the full {linear, mlp, mlp_linear} x {e2, logbilinear}
// grid.
BenchTable run_ablation(const data::Dataset& dataset,
                        const model::TrainConfig& base_train,
                        const BenchConfig& bench,
                        const std::function<void(const std::string&)>& log = {},
                        std::vector<model::ForwardModelSpec::Variant> fm_grid = {},
                        std::vector<nn::Similarity> sim_grid = {});

std::string to_tsv(const BenchTable& table);
nlohmann::json to_json(const BenchTable& table);

}  // namespace cfm::eval

#endif  // CFM_EVAL_BENCH_HPP_
