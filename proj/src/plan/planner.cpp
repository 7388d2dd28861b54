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

#include "cfm/plan/planner.hpp"

#include <cmath>
#include <stdexcept>

namespace cfm::plan {

std::vector<std::vector<float>> LatentModel::predict_batch(
    const std::vector<float>& z,
    const std::vector<sim::PickPlaceAction>& actions) const {
  std::vector<std::vector<float>> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(predict(z, a));
  return out;
}

std::vector<float> CheckpointModel::encode(const sim::ImageObs& obs) const {
  return model::encode(*ckpt_, obs);
}

std::vector<float> CheckpointModel::predict(const std::vector<float>& z,
                                            const sim::PickPlaceAction& a) const {
  return model::forward_latent(*ckpt_, z, a);
}

std::vector<std::vector<float>> CheckpointModel::predict_batch(
    const std::vector<float>& z,
    const std::vector<sim::PickPlaceAction>& actions) const {
  const int n = static_cast<int>(actions.size());
  const int adim = ckpt_->specs.action_dim;
  std::vector<float> flat;
  flat.reserve(static_cast<size_t>(n) * adim);
  for (const auto& a : actions) {
    auto f = a.flat(ckpt_->specs.env);
    flat.insert(flat.end(), f.begin(), f.end());
  }
  auto t = model::forward_latent_batch(*ckpt_, z, flat, n);
  const int d = ckpt_->specs.latent_dim;
  std::vector<std::vector<float>> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[static_cast<size_t>(i)].assign(t.data.begin() + static_cast<int64_t>(i) * d,
                                       t.data.begin() + static_cast<int64_t>(i + 1) * d);
  }
  return out;
}

std::vector<sim::PickPlaceAction> sample_candidate_actions(
    const sim::BinaryMask& mask, int n, nn::Rng& rng, sim::EnvKind kind) {
  if (n < 1) throw std::invalid_argument("sample_candidate_actions: n must be >= 1");
  std::vector<int> fg;
  if (kind != sim::EnvKind::kPointmass) {
    for (int i = 0; i < mask.h * mask.w; ++i) {
      if (mask.fg[static_cast<size_t>(i)]) fg.push_back(i);
    }
    if (fg.empty()) {
      throw std::runtime_error("sample_candidate_actions: empty segmentation mask");
    }
  }
  std::vector<sim::PickPlaceAction> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (kind == sim::EnvKind::kPointmass) {
      out.push_back(sim::PickPlaceAction::make(kind, 0, 0, rng.uniform(-1, 1),
                                               rng.uniform(-1, 1)));
      continue;
    }
    int px = fg[static_cast<size_t>(rng.uniform_int(static_cast<int>(fg.size())))];
    double u = (px % mask.w + 0.5) / mask.w;
    double v = (px / mask.w + 0.5) / mask.h;
    double dz = kind == sim::EnvKind::kCloth ? rng.uniform(-1, 1) : 0.0;
    out.push_back(sim::PickPlaceAction::make(kind, u, v, rng.uniform(-1, 1),
                                             rng.uniform(-1, 1), dz));
  }
  return out;
}

PlanResult plan_step(const LatentModel& m, const sim::ImageObs& obs,
                     const std::vector<float>& goal_latent,
                     const sim::BinaryMask& mask, int n, nn::Rng& rng,
                     sim::EnvKind kind) {
  PlanResult r;
  r.z_current = m.encode(obs);
  r.z_goal = goal_latent;
  r.candidates = sample_candidate_actions(mask, n, rng, kind);
  auto preds = m.predict_batch(r.z_current, r.candidates);
  r.distances.resize(preds.size());
  for (size_t i = 0; i < preds.size(); ++i) {
    double d2 = 0.0;
    for (size_t c = 0; c < goal_latent.size(); ++c) {
      double d = static_cast<double>(preds[i][c]) - goal_latent[c];
      d2 += d * d;
    }
    r.distances[i] = std::sqrt(d2);
  }
  r.chosen_index = 0;
  for (size_t i = 1; i < r.distances.size(); ++i) {
    if (r.distances[i] < r.distances[static_cast<size_t>(r.chosen_index)]) {
      r.chosen_index = static_cast<int>(i);
    }
  }
  r.chosen = r.candidates[static_cast<size_t>(r.chosen_index)];
  return r;
}

PlanResult plan_step(const LatentModel& m, const sim::ImageObs& obs,
                     const sim::ImageObs& goal_obs, const sim::BinaryMask& mask,
                     int n, nn::Rng& rng, sim::EnvKind kind) {
  return plan_step(m, obs, m.encode(goal_obs), mask, n, rng, kind);
}

sim::PickPlaceAction random_policy_step(const sim::BinaryMask& mask,
                                        nn::Rng& rng, sim::EnvKind kind) {
  return sample_candidate_actions(mask, 1, rng, kind)[0];
}

}  // namespace cfm::plan
