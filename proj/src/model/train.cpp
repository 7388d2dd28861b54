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

#include "cfm/model/train.hpp"

#include <cmath>

namespace cfm::model {

TrainResult train(const data::TransitionView& data, const TrainConfig& cfg,
                  const std::function<void(int, double)>& progress) {
  if (cfg.objective != "cfm" && cfg.objective != "autoencoder" &&
      cfg.objective != "joint" && cfg.objective != "mse") {
    throw std::invalid_argument("train: unknown objective " + cfg.objective);
  }
  TrainResult result;
  result.ckpt = init_checkpoint(data.kind(), data.image_size(), cfg.latent_dim,
                                cfg.fm, cfg.objective, cfg.similarity,
                                cfg.include_positive, cfg.seed);
  nlohmann::json echo{{"objective", cfg.objective},
                      {"similarity", nn::to_string(cfg.similarity)},
                      {"include_positive", cfg.include_positive},
                      {"fm", cfg.fm.to_json()},
                      {"latent_dim", cfg.latent_dim},
                      {"epochs", cfg.epochs},
                      {"batch_size", cfg.batch_size},
                      {"lr", cfg.lr},
                      {"beta1", cfg.beta1},
                      {"beta2", cfg.beta2},
                      {"eps", cfg.eps},
                      {"lambda_f", cfg.lambda_f},
                      {"lambda_inv", cfg.lambda_inv},
                      {"seed", cfg.seed}};
  result.ckpt.train_config_json = echo.dump();

  LossOptions opt;
  opt.similarity = cfg.similarity;
  opt.include_positive = cfg.include_positive;
  opt.lambda_f = cfg.lambda_f;
  opt.lambda_inv = cfg.lambda_inv;

  nn::AdamConfig adam;
  adam.lr = cfg.lr;
  adam.beta1 = cfg.beta1;
  adam.beta2 = cfg.beta2;
  adam.eps = cfg.eps;

  nn::Rng root(nn::Rng::mix(cfg.seed, 0x7EA1));
  data::BatchSampler sampler(data, cfg.batch_size, root.split(1));
  const int64_t batches = sampler.batches_per_epoch();
  if (batches < 1) {
    throw std::invalid_argument("train: dataset smaller than one batch");
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double sum = 0.0;
    for (int64_t bi = 0; bi < batches; ++bi) {
      data::Batch batch = sampler.next();
      nn::Graph<float> g;
      nn::GraphBinding<float> bind(g, result.ckpt.params);
      int loss = build_objective_loss(g, bind, result.ckpt.specs, batch,
                                      cfg.objective, opt);
      double value = g.val(loss).data[0];
      if (!std::isfinite(value)) {
        throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                 std::to_string(epoch));
      }
      g.backward(loss);
      result.ckpt.params.zero_grads();
      bind.pull_grads();
      nn::adam_step(result.ckpt.params, adam);
      sum += value;
    }
    double mean = sum / static_cast<double>(batches);
    result.epoch_loss.push_back(mean);
    if (progress) progress(epoch, mean);
  }
  return result;
}

}  // namespace cfm::model
