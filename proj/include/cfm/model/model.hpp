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

#ifndef CFM_MODEL_MODEL_HPP_
#define CFM_MODEL_MODEL_HPP_

#include <string>
#include <vector>

#include "cfm/model/spec.hpp"
#include "cfm/nn/graph.hpp"
#include "cfm/nn/param_store.hpp"
#include "cfm/nn/rng.hpp"
#include "cfm/sim/env.hpp"

namespace cfm::model {

// Everything needed to rebuild the computation graphs.
struct ModelSpecs {
  sim::EnvKind env = sim::EnvKind::kRope;
  int image_size = 32;
  int action_dim = 4;
  int latent_dim = 8;
  EncoderSpec enc;
  ForwardModelSpec fm;
  bool has_decoder = false;
  bool has_inverse = false;
};

struct Checkpoint {
  ModelSpecs specs;
  std::string objective = "cfm";  // cfm | autoencoder | joint | mse
  nn::Similarity similarity = nn::Similarity::kE2;
  bool include_positive = true;
  nn::ParamStore<float> params;
  std::string train_config_json = "{}";
};

// Fresh parameters for the given specs (Glorot-uniform weights, zero biases),
// deterministic in the seed.
Checkpoint init_checkpoint(sim::EnvKind env, int image_size, int latent_dim,
                           const ForwardModelSpec& fm,
                           const std::string& objective,
                           nn::Similarity similarity, bool include_positive,
                           uint64_t seed);

template <typename T>
void init_params(nn::ParamStore<T>& store, const ModelSpecs& specs, nn::Rng rng);

// Graph builders; parameters come from the binding's store and are shared
// across multiple calls within one graph.
template <typename T>
int build_encoder(nn::Graph<T>& g, nn::GraphBinding<T>& bind,
                  const EncoderSpec& spec, int images);
template <typename T>
int build_forward_model(nn::Graph<T>& g, nn::GraphBinding<T>& bind,
                        const ForwardModelSpec& spec, int z, int a,
                        int latent_dim);
template <typename T>
int build_decoder(nn::Graph<T>& g, nn::GraphBinding<T>& bind,
                  const EncoderSpec& enc, int z);
template <typename T>
int build_inverse_model(nn::Graph<T>& g, nn::GraphBinding<T>& bind, int z_t,
                        int z_tp1, int action_dim);

// Decoder mirror of an encoder preset: channel sequence from the deepest
// filter bank down to RGB, one transposed conv per stride-2 encoder layer.
std::vector<int> decoder_channels(const EncoderSpec& enc);

// Deterministic single-observation embedding.
std::vector<float> encode(const Checkpoint& ckpt, const sim::ImageObs& obs);
// Batched encode of b images stored as consecutive HWC u8 blobs; row i of
// the result equals encode() of image i.
nn::Tensor<float> encode_batch(const Checkpoint& ckpt, const uint8_t* blob,
                               int b);

std::vector<float> forward_latent(const Checkpoint& ckpt,
                                  const std::vector<float>& z,
                                  const sim::PickPlaceAction& action);
// Batched: one shared z against n candidate actions (flattened [n, adim]).
nn::Tensor<float> forward_latent_batch(const Checkpoint& ckpt,
                                       const std::vector<float>& z,
                                       const std::vector<float>& actions_flat,
                                       int n);

// Similarity h of Eq. 2 and the log-bilinear ablation.
double similarity_e2(const std::vector<float>& z1, const std::vector<float>& z2);
double similarity_logbilinear(const std::vector<float>& z1,
                              const std::vector<float>& z2);

extern template void init_params<float>(nn::ParamStore<float>&, const ModelSpecs&, nn::Rng);
extern template void init_params<double>(nn::ParamStore<double>&, const ModelSpecs&, nn::Rng);
extern template int build_encoder<float>(nn::Graph<float>&, nn::GraphBinding<float>&, const EncoderSpec&, int);
extern template int build_encoder<double>(nn::Graph<double>&, nn::GraphBinding<double>&, const EncoderSpec&, int);
extern template int build_forward_model<float>(nn::Graph<float>&, nn::GraphBinding<float>&, const ForwardModelSpec&, int, int, int);
extern template int build_forward_model<double>(nn::Graph<double>&, nn::GraphBinding<double>&, const ForwardModelSpec&, int, int, int);
extern template int build_decoder<float>(nn::Graph<float>&, nn::GraphBinding<float>&, const EncoderSpec&, int);
extern template int build_decoder<double>(nn::Graph<double>&, nn::GraphBinding<double>&, const EncoderSpec&, int);
extern template int build_inverse_model<float>(nn::Graph<float>&, nn::GraphBinding<float>&, int, int, int);
extern template int build_inverse_model<double>(nn::Graph<double>&, nn::GraphBinding<double>&, int, int, int);

}  // namespace cfm::model

#endif  // CFM_MODEL_MODEL_HPP_
