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

#ifndef CFM_MODEL_TRAIN_HPP_
#define CFM_MODEL_TRAIN_HPP_

#include <functional>

#include "cfm/data/dataset.hpp"
#include "cfm/model/losses.hpp"

namespace cfm::model {

struct TrainConfig {
  std::string objective = "cfm";
  nn::Similarity similarity = nn::Similarity::kE2;
  bool include_positive = true;
  ForwardModelSpec fm;
  int latent_dim = 8;
  int epochs = 30;
  int batch_size = 128;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lambda_f = 1.0;
  double lambda_inv = 1.0;
  uint64_t seed = 0;
};

struct TrainResult {
  Checkpoint ckpt;
  std::vector<double> epoch_loss;  // mean loss per epoch
};

// Offline training over (o_t, a_t, o_{t+1}) tuples. Deterministic in
// (config, data) for any worker count; throws on divergence (non-finite
// loss). progress, when set, is called after each epoch.
TrainResult train(const data::TransitionView& data, const TrainConfig& cfg,
                  const std::function<void(int, double)>& progress = {});

}  // namespace cfm::model

#endif  // CFM_MODEL_TRAIN_HPP_
