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

#ifndef CFM_MODEL_CHECKPOINT_IO_HPP_
#define CFM_MODEL_CHECKPOINT_IO_HPP_

#include <string>
#include <vector>

#include "cfm/model/model.hpp"

namespace cfm::model {

// "CFMC" container: magic, u32 version, length-prefixed UTF-8 JSON
// descriptor, then named f32 tensors, little-endian throughout.
std::vector<uint8_t> checkpoint_to_bytes(const Checkpoint& ckpt);
Checkpoint checkpoint_from_bytes(const std::vector<uint8_t>& bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cfm::model

#endif  // CFM_MODEL_CHECKPOINT_IO_HPP_
