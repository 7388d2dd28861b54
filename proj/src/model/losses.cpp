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

#include "cfm/model/losses.hpp"

namespace cfm::model {

namespace {

template <typename T>
struct BatchNodes {
  int obs_t, obs_tp1, actions;
};

template <typename T>
BatchNodes<T> load_batch(nn::Graph<T>& g, const data::Batch& batch) {
  BatchNodes<T> n;
  n.obs_t = g.leaf(data::images_to_tensor<T>(batch.obs_t.data(), batch.b,
                                             batch.h, batch.w));
  n.obs_tp1 = g.leaf(data::images_to_tensor<T>(batch.obs_tp1.data(), batch.b,
                                               batch.h, batch.w));
  nn::Tensor<T> a({batch.b, batch.action_dim});
  for (size_t i = 0; i < batch.actions.size(); ++i) {
    a.data[i] = static_cast<T>(batch.actions[i]);
  }
  n.actions = g.leaf(std::move(a));
  return n;
}

// mean_i ||rows_a[i] - rows_b[i]||^2  ==  sum((a-b)^2) / B
template <typename T>
int mean_row_sumsq(nn::Graph<T>& g, int a, int b, int rows) {
  int diff = g.sub(a, b);
  int sq = g.square(diff);
  int s = g.sum(sq);
  return g.scale(s, static_cast<T>(1.0 / rows));
}

}  // namespace

template <typename T>
int build_objective_loss(nn::Graph<T>& g, nn::GraphBinding<T>& bind,
                         const ModelSpecs& specs, const data::Batch& batch,
                         const std::string& objective, const LossOptions& opt) {
  if (batch.b < 2) {
    throw std::invalid_argument("objective loss: batch size must be >= 2");
  }
  if (batch.action_dim != specs.action_dim) {
    throw std::invalid_argument("objective loss: action dim mismatch");
  }
  auto nodes = load_batch<T>(g, batch);
  int z = build_encoder(g, bind, specs.enc, nodes.obs_t);
  int zn = build_encoder(g, bind, specs.enc, nodes.obs_tp1);
  int zhat = build_forward_model(g, bind, specs.fm, z, nodes.actions,
                                 specs.latent_dim);

  if (objective == "cfm") {
    return g.infonce(zhat, zn, opt.similarity, opt.include_positive);
  }
  if (objective == "mse") {
    return mean_row_sumsq(g, zhat, zn, batch.b);
  }
  if (objective == "autoencoder") {
    if (!specs.has_decoder) {
      throw std::invalid_argument("autoencoder loss: checkpoint has no decoder");
    }
    int recon = build_decoder(g, bind, specs.enc, z);
    int l_rec = g.mse(recon, nodes.obs_t);
    int l_fwd = mean_row_sumsq(g, zhat, zn, batch.b);
    return g.add(l_rec, g.scale(l_fwd, static_cast<T>(opt.lambda_f)));
  }
  if (objective == "joint") {
    if (!specs.has_inverse) {
      throw std::invalid_argument("joint loss: checkpoint has no inverse head");
    }
    int l_fwd = mean_row_sumsq(g, zhat, zn, batch.b);
    int ahat = build_inverse_model(g, bind, z, zn, specs.action_dim);
    int l_inv = mean_row_sumsq(g, ahat, nodes.actions, batch.b);
    return g.add(l_fwd, g.scale(l_inv, static_cast<T>(opt.lambda_inv)));
  }
  throw std::invalid_argument("unknown objective: " + objective);
}

namespace {

double eval_loss64(const Checkpoint& ckpt, const data::Batch& batch,
                   const std::string& objective, const LossOptions& opt) {
  auto params = ckpt.params.cast<double>();
  nn::Graph<double> g;
  nn::GraphBinding<double> bind(g, params);
  int loss = build_objective_loss(g, bind, ckpt.specs, batch, objective, opt);
  return g.val(loss).data[0];
}

}  // namespace

double infonce_loss(const Checkpoint& ckpt, const data::Batch& batch,
                    nn::Similarity similarity, bool include_positive) {
  LossOptions opt;
  opt.similarity = similarity;
  opt.include_positive = include_positive;
  return eval_loss64(ckpt, batch, "cfm", opt);
}

double autoencoder_loss(const Checkpoint& ckpt, const data::Batch& batch,
                        double lambda_f) {
  LossOptions opt;
  opt.lambda_f = lambda_f;
  return eval_loss64(ckpt, batch, "autoencoder", opt);
}

double joint_loss(const Checkpoint& ckpt, const data::Batch& batch,
                  double lambda_inv) {
  LossOptions opt;
  opt.lambda_inv = lambda_inv;
  return eval_loss64(ckpt, batch, "joint", opt);
}

double latent_mse_loss(const Checkpoint& ckpt, const data::Batch& batch) {
  return eval_loss64(ckpt, batch, "mse", LossOptions{});
}

template int build_objective_loss<float>(nn::Graph<float>&, nn::GraphBinding<float>&, const ModelSpecs&, const data::Batch&, const std::string&, const LossOptions&);
template int build_objective_loss<double>(nn::Graph<double>&, nn::GraphBinding<double>&, const ModelSpecs&, const data::Batch&, const std::string&, const LossOptions&);

}  // namespace cfm::model
