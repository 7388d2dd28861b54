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

#include "cfm/model/spec.hpp"

#include <stdexcept>

namespace cfm::model {

EncoderSpec EncoderSpec::preset(int image_size, int latent_dim) {
  EncoderSpec s;
  s.image_size = image_size;
  s.latent_dim = latent_dim;
  switch (image_size) {
    case 64:
      s.kernels = {3, 4, 3, 4, 4, 4};
      s.strides = {1, 2, 1, 2, 2, 2};
      s.filters = {64, 64, 64, 128, 256, 256};
      break;
    case 32:
      s.kernels = {3, 4, 4, 4};
      s.strides = {1, 2, 2, 2};
      s.filters = {16, 32, 32, 64};
      break;
    case 16:
      s.kernels = {3, 4, 4};
      s.strides = {1, 2, 2};
      s.filters = {16, 32, 64};
      break;
    default:
      throw std::invalid_argument("EncoderSpec: no preset for image size " +
                                  std::to_string(image_size));
  }
  s.pads.assign(s.kernels.size(), 1);
  s.validate();
  return s;
}

int EncoderSpec::final_spatial() const {
  int sp = image_size;
  for (int i = 0; i < layer_count(); ++i) {
    sp = (sp + 2 * pads[static_cast<size_t>(i)] - kernels[static_cast<size_t>(i)]) /
             strides[static_cast<size_t>(i)] +
         1;
  }
  return sp;
}

int EncoderSpec::flat_dim() const {
  int sp = final_spatial();
  return filters.back() * sp * sp;
}

void EncoderSpec::validate() const {
  if (kernels.empty() || kernels.size() != strides.size() ||
      kernels.size() != pads.size() || kernels.size() != filters.size()) {
    throw std::invalid_argument("EncoderSpec: inconsistent layer lists");
  }
  if (latent_dim < 1) throw std::invalid_argument("EncoderSpec: latent_dim < 1");
  if (final_spatial() < 1) {
    throw std::invalid_argument("EncoderSpec: stack collapses below 1x1");
  }
}

nlohmann::json EncoderSpec::to_json() const {
  return nlohmann::json{{"image_size", image_size}, {"in_channels", in_channels},
                        {"kernels", kernels},       {"strides", strides},
                        {"pads", pads},             {"filters", filters},
                        {"latent_dim", latent_dim}};
}

EncoderSpec EncoderSpec::from_json(const nlohmann::json& j) {
  EncoderSpec s;
  s.image_size = j.at("image_size").get<int>();
  s.in_channels = j.at("in_channels").get<int>();
  s.kernels = j.at("kernels").get<std::vector<int>>();
  s.strides = j.at("strides").get<std::vector<int>>();
  s.pads = j.at("pads").get<std::vector<int>>();
  s.filters = j.at("filters").get<std::vector<int>>();
  s.latent_dim = j.at("latent_dim").get<int>();
  s.validate();
  return s;
}

ForwardModelSpec::Variant fm_variant_from_string(const std::string& s) {
  if (s == "linear") return ForwardModelSpec::Variant::kLinear;
  if (s == "mlp") return ForwardModelSpec::Variant::kMlp;
  if (s == "mlp_linear") return ForwardModelSpec::Variant::kMlpLinear;
  throw std::invalid_argument("unknown forward-model variant: " + s);
}

std::string to_string(ForwardModelSpec::Variant v) {
  switch (v) {
    case ForwardModelSpec::Variant::kLinear: return "linear";
    case ForwardModelSpec::Variant::kMlp: return "mlp";
    case ForwardModelSpec::Variant::kMlpLinear: return "mlp_linear";
  }
  return "?";
}

nlohmann::json ForwardModelSpec::to_json() const {
  return nlohmann::json{{"variant", to_string(variant)},
                        {"hidden", hidden},
                        {"action_only", action_only}};
}

ForwardModelSpec ForwardModelSpec::from_json(const nlohmann::json& j) {
  ForwardModelSpec s;
  s.variant = fm_variant_from_string(j.at("variant").get<std::string>());
  s.hidden = j.at("hidden").get<std::vector<int>>();
  s.action_only = j.at("action_only").get<bool>();
  return s;
}

}  // namespace cfm::model
