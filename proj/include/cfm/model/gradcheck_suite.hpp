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

#ifndef CFM_MODEL_GRADCHECK_SUITE_HPP_
#define CFM_MODEL_GRADCHECK_SUITE_HPP_

#include <string>
#include <vector>

namespace cfm::model {

struct GradCheckItem {
  std::string name;
  double max_rel_err = 0.0;
  int64_t coords = 0;
  int64_t skipped = 0;
};

// Finite-difference verification of every layer plus the cfm, autoencoder
// and joint objectives on 16x16 batches, across the given number of seeds.
// All checks run in 64-bit.
std::vector<GradCheckItem> run_gradcheck_suite(int seeds, double h, int coords,
                                               double tol, uint64_t seed);

}  // namespace cfm::model

#endif  // CFM_MODEL_GRADCHECK_SUITE_HPP_
