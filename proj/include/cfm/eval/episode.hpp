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

#ifndef CFM_EVAL_EPISODE_HPP_
#define CFM_EVAL_EPISODE_HPP_

#include "cfm/eval/goals.hpp"
#include "cfm/plan/planner.hpp"

namespace cfm::eval {

struct EpisodeConfig {
  sim::EnvKind env = sim::EnvKind::kRope;
  GoalSpec goal;
  int max_steps = 20;
  int n_candidates = 100;
  uint64_t seed = 0;
  bool randomize = false;
  int image_size = 32;
  sim::SimConfig sim;
};

struct StepLog {
  sim::PickPlaceAction action;
  double metric = 0.0;
  int intersection = 0;
  double chosen_distance = 0.0;  // planner only
};

struct EpisodeReport {
  // Entry 0 is the pre-action baseline; one more entry per executed action.
  std::vector<double> metric_trace;
  std::vector<int> intersection_trace;
  std::vector<StepLog> steps;
  double best_metric = 0.0;   // min over the trace
  double final_metric = 0.0;  // last trace entry
  int actions_executed = 0;
  uint64_t seed = 0;
  double wall_seconds = 0.0;
};

// Closed-loop rollout: reset, then max_steps iterations of segment -> plan
// (or random policy when policy == nullptr) -> step -> render -> record
// metric against the goal. Deterministic given the seed. The goal embedding
// is computed once and cached.
EpisodeReport run_episode(const EpisodeConfig& cfg,
                          const plan::LatentModel* policy);

}  // namespace cfm::eval

#endif  // CFM_EVAL_EPISODE_HPP_
