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

#ifndef CFM_MODEL_LOSSES_HPP_
#define CFM_MODEL_LOSSES_HPP_

#include "cfm/data/dataset.hpp"
#include "cfm/model/model.hpp"

namespace cfm::model {

struct LossOptions {
  nn::Similarity similarity = nn::Similarity::kE2;
  bool include_positive = true;
  double lambda_f = 1.0;    // latent forward weight in the autoencoder loss
  double lambda_inv = 1.0;  // inverse weight in the joint loss
};

// Builds the training graph for one batch and returns the scalar loss node.
// objective: cfm | autoencoder | joint | mse (naive latent-MSE).
template <typename T>
int build_objective_loss(nn::Graph<T>& g, nn::GraphBinding<T>& bind,
                         const ModelSpecs& specs, const data::Batch& batch,
                         const std::string& objective, const LossOptions& opt);

// Convenience evaluators over a checkpoint, computed in 64-bit.
double infonce_loss(const Checkpoint& ckpt, const data::Batch& batch,
                    nn::Similarity similarity, bool include_positive = true);
double autoencoder_loss(const Checkpoint& ckpt, const data::Batch& batch,
                        double lambda_f = 1.0);
double joint_loss(const Checkpoint& ckpt, const data::Batch& batch,
                  double lambda_inv = 1.0);
// Naive forward-prediction MSE alone; the collapse witness:
// a constant encoder scores exactly 0 here but ln(B) on InfoNCE.
double latent_mse_loss(const Checkpoint& ckpt, const data::Batch& batch);

extern template int build_objective_loss<float>(nn::Graph<float>&, nn::GraphBinding<float>&, const ModelSpecs&, const data::Batch&, const std::string&, const LossOptions&);
extern template int build_objective_loss<double>(nn::Graph<double>&, nn::GraphBinding<double>&, const ModelSpecs&, const data::Batch&, const std::string&, const LossOptions&);

}  // namespace cfm::model

#endif  // CFM_MODEL_LOSSES_HPP_
