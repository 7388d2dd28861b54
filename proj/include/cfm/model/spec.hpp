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

#ifndef CFM_MODEL_SPEC_HPP_
#define CFM_MODEL_SPEC_HPP_

#include <json.hpp>
#include <string>
#include <vector>

namespace cfm::model {

// Convolutional encoder stack. Presets: 64px is the six-conv stack
// (kernels [3,4,3,4,4,4], strides [1,2,1,2,2,2], filters
// [64,64,64,128,256,256]); 32px and 16px are scaled-down variants for desk
// runs. Stride-1 layers preserve spatial size, stride-2 layers halve it.
struct EncoderSpec {
  int image_size = 32;
  int in_channels = 3;
  std::vector<int> kernels;
  std::vector<int> strides;
  std::vector<int> pads;
  std::vector<int> filters;
  int latent_dim = 8;

  static EncoderSpec preset(int image_size, int latent_dim = 8);

  int layer_count() const { return static_cast<int>(kernels.size()); }
  int final_spatial() const;
  int flat_dim() const;
  void validate() const;

  nlohmann::json to_json() const;
  static EncoderSpec from_json(const nlohmann::json& j);
};

// Latent forward model f(z_t, a_t). The mlp_linear variant runs an MLP that
// outputs the d*d+d parameters of an affine map applied to z_t; the MLP sees
// concat(z,a) by default or the action alone when action_only is set.
struct ForwardModelSpec {
  enum class Variant { kLinear, kMlp, kMlpLinear };
  Variant variant = Variant::kMlpLinear;
  std::vector<int> hidden{32, 32};
  bool action_only = false;

  nlohmann::json to_json() const;
  static ForwardModelSpec from_json(const nlohmann::json& j);
};

ForwardModelSpec::Variant fm_variant_from_string(const std::string& s);
std::string to_string(ForwardModelSpec::Variant v);

}  // namespace cfm::model

#endif  // CFM_MODEL_SPEC_HPP_
