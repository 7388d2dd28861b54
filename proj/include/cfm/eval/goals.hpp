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

#ifndef CFM_EVAL_GOALS_HPP_
#define CFM_EVAL_GOALS_HPP_

#include <string>

#include "cfm/sim/env.hpp"

namespace cfm::eval {

// Valid per env: rope {horizontal, vertical, diag45, diag135, squiggle,
// random}; cloth {flat, random}; pointmass {center, random}.
enum class GoalId {
  kHorizontal,
  kVertical,
  kDiag45,
  kDiag135,
  kSquiggle,
  kRandom,
  kFlat,
  kCenter,
};

GoalId goal_from_string(const std::string& s);
std::string to_string(GoalId id);

struct GoalSpec {
  sim::EnvKind env = sim::EnvKind::kRope;
  GoalId id = GoalId::kRandom;
  uint64_t seed = 0;  // used by random goals
};

struct Goal {
  sim::EnvState state;
  sim::ImageObs obs;  // rendered with canonical params
};

// Analytic goal states: rope lines are 25 particles at rest spacing through
// the workspace center; cloth flat is the centered grid; random goals are
// reset() states. Throws on invalid env/goal combinations.
Goal make_goal(const GoalSpec& spec, int image_size = 32,
               const sim::SimConfig& cfg = {});

}  // namespace cfm::eval

#endif  // CFM_EVAL_GOALS_HPP_
