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

#ifndef CFM_PLAN_PLANNER_HPP_
#define CFM_PLAN_PLANNER_HPP_

#include <vector>

#include "cfm/model/model.hpp"
#include "cfm/nn/rng.hpp"
#include "cfm/sim/env.hpp"

namespace cfm::plan {

// What one-step MPC needs from a model. Tests inject oracles through this
// interface.
class LatentModel {
 public:
  virtual ~LatentModel() = default;
  virtual std::vector<float> encode(const sim::ImageObs& obs) const = 0;
  virtual std::vector<float> predict(const std::vector<float>& z,
                                     const sim::PickPlaceAction& a) const = 0;
  // Batched candidate scoring; default falls back to predict() per action.
  virtual std::vector<std::vector<float>> predict_batch(
      const std::vector<float>& z,
      const std::vector<sim::PickPlaceAction>& actions) const;
};

class CheckpointModel final : public LatentModel {
 public:
  explicit CheckpointModel(const model::Checkpoint& ckpt) : ckpt_(&ckpt) {}
  std::vector<float> encode(const sim::ImageObs& obs) const override;
  std::vector<float> predict(const std::vector<float>& z,
                             const sim::PickPlaceAction& a) const override;
  std::vector<std::vector<float>> predict_batch(
      const std::vector<float>& z,
      const std::vector<sim::PickPlaceAction>& actions) const override;

 private:
  const model::Checkpoint* ckpt_;
};

// Picks uniform over foreground mask pixels (converted to normalized image
// coordinates), deltas uniform in [-1,1]^dims. Pointmass actions need no
// pick, so the mask may be empty for it.
std::vector<sim::PickPlaceAction> sample_candidate_actions(
    const sim::BinaryMask& mask, int n, nn::Rng& rng, sim::EnvKind kind);

struct PlanResult {
  sim::PickPlaceAction chosen;
  int chosen_index = -1;
  std::vector<sim::PickPlaceAction> candidates;
  std::vector<double> distances;  // predicted latent L2 distance to goal
  std::vector<float> z_current;
  std::vector<float> z_goal;
};

// One-step MPC: encode, roll every candidate through the forward model, and
// return the argmin of L2 distance to the goal embedding. Ties break toward
// the lowest candidate index.
PlanResult plan_step(const LatentModel& m, const sim::ImageObs& obs,
                     const std::vector<float>& goal_latent,
                     const sim::BinaryMask& mask, int n, nn::Rng& rng,
                     sim::EnvKind kind);
PlanResult plan_step(const LatentModel& m, const sim::ImageObs& obs,
                     const sim::ImageObs& goal_obs, const sim::BinaryMask& mask,
                     int n, nn::Rng& rng, sim::EnvKind kind);

// Random policy baseline: one uniformly sampled candidate.
sim::PickPlaceAction random_policy_step(const sim::BinaryMask& mask,
                                        nn::Rng& rng, sim::EnvKind kind);

}  // namespace cfm::plan

#endif  // CFM_PLAN_PLANNER_HPP_
