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

#include "cfm/eval/episode.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "cfm/eval/metrics.hpp"
#include "cfm/sim/render.hpp"

namespace cfm::eval {

EpisodeReport run_episode(const EpisodeConfig& cfg,
                          const plan::LatentModel* policy) {
  const auto t0 = std::chrono::steady_clock::now();
  EpisodeReport rep;
  rep.seed = cfg.seed;

  auto rr = sim::reset(cfg.env, cfg.seed, cfg.randomize, cfg.sim, cfg.image_size);
  sim::EnvState state = rr.state;
  sim::RenderParams params = rr.params;
  sim::ImageObs obs = rr.obs;

  Goal goal = make_goal(cfg.goal, cfg.image_size, cfg.sim);
  const sim::RenderParams canonical;
  const sim::BinaryMask goal_mask = sim::segment(goal.obs, canonical);

  std::vector<float> z_goal;
  if (policy != nullptr) z_goal = policy->encode(goal.obs);

  nn::Rng rng(nn::Rng::mix(cfg.seed, 0xE915));

  rep.metric_trace.push_back(paired_geom_distance(state, goal.state));
  rep.intersection_trace.push_back(
      pixel_intersection(sim::segment(obs, params), goal_mask));

  for (int t = 0; t < cfg.max_steps; ++t) {
    sim::BinaryMask mask = sim::segment(obs, params);
    sim::ImageObs plan_obs = obs;
    if (cfg.env != sim::EnvKind::kPointmass && mask.area() == 0) {
      // Appearance failure: fall back to a canonical re-render for this step.
      plan_obs = sim::render(state, canonical, cfg.image_size);
      mask = sim::segment(plan_obs, canonical);
      if (mask.area() == 0) {
        throw std::runtime_error(
            "run_episode: empty segmentation even under canonical parameters "
            "(env " + sim::to_string(cfg.env) + ", seed " +
            std::to_string(cfg.seed) + ", step " + std::to_string(t) + ")");
      }
    }

    StepLog log;
    if (policy != nullptr) {
      auto plan = plan::plan_step(*policy, plan_obs, z_goal, mask,
                                  cfg.n_candidates, rng, cfg.env);
      log.action = plan.chosen;
      log.chosen_distance = plan.distances[static_cast<size_t>(plan.chosen_index)];
    } else {
      log.action = plan::random_policy_step(mask, rng, cfg.env);
    }

    state = sim::step(state, log.action, params, cfg.sim);
    obs = sim::render(state, params, cfg.image_size);

    log.metric = paired_geom_distance(state, goal.state);
    log.intersection = pixel_intersection(sim::segment(obs, params), goal_mask);
    rep.metric_trace.push_back(log.metric);
    rep.intersection_trace.push_back(log.intersection);
    rep.steps.push_back(log);
    ++rep.actions_executed;
  }

  rep.best_metric = *std::min_element(rep.metric_trace.begin(), rep.metric_trace.end());
  rep.final_metric = rep.metric_trace.back();
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace cfm::eval
