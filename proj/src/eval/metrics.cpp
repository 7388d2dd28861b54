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

#include "cfm/eval/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace cfm::eval {

double paired_geom_distance_indexed(const sim::EnvState& a,
                                    const sim::EnvState& b) {
  if (a.kind != b.kind || a.pos.size() != b.pos.size()) {
    throw std::invalid_argument(
        "paired_geom_distance: env kind or particle count mismatch");
  }
  double total = 0.0;
  for (size_t i = 0; i < a.pos.size(); ++i) {
    double dx = a.pos[i].x - b.pos[i].x;
    double dy = a.pos[i].y - b.pos[i].y;
    double dz = a.pos[i].z - b.pos[i].z;
    total += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return total;
}

double paired_geom_distance(const sim::EnvState& a, const sim::EnvState& b) {
  double fwd = paired_geom_distance_indexed(a, b);
  if (a.kind != sim::EnvKind::kRope) return fwd;
  double rev = 0.0;
  const size_t n = a.pos.size();
  for (size_t i = 0; i < n; ++i) {
    const auto& pa = a.pos[i];
    const auto& pb = b.pos[n - 1 - i];
    double dx = pa.x - pb.x;
    double dy = pa.y - pb.y;
    double dz = pa.z - pb.z;
    rev += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return std::min(fwd, rev);
}

int pixel_intersection(const sim::BinaryMask& a, const sim::BinaryMask& b) {
  if (a.h != b.h || a.w != b.w) {
    throw std::invalid_argument("pixel_intersection: mask dimensions differ");
  }
  int n = 0;
  for (size_t i = 0; i < a.fg.size(); ++i) {
    if (a.fg[i] && b.fg[i]) ++n;
  }
  return n;
}

}  // namespace cfm::eval
