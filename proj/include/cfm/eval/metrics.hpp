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

#ifndef CFM_EVAL_METRICS_HPP_
#define CFM_EVAL_METRICS_HPP_

#include "cfm/sim/env.hpp"

namespace cfm::eval {

// Sum over index-matched particles of the Euclidean distance between the two
// states, in workspace units. For rope the reversed indexing is also
// evaluated and the minimum taken (a straight rope matches a line goal in
// either orientation).
double paired_geom_distance(const sim::EnvState& a, const sim::EnvState& b);

// Index-matched form without the rope reversal (the pseudometric the
// property tests exercise).
double paired_geom_distance_indexed(const sim::EnvState& a,
                                    const sim::EnvState& b);

// Count of pixels foreground in both masks.
int pixel_intersection(const sim::BinaryMask& a, const sim::BinaryMask& b);

}  // namespace cfm::eval

#endif  // CFM_EVAL_METRICS_HPP_
