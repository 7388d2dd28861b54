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

#ifndef CFM_SIM_RENDER_HPP_
#define CFM_SIM_RENDER_HPP_

#include "cfm/nn/rng.hpp"
#include "cfm/sim/env.hpp"

namespace cfm::sim {

// 8-bit RGB distance below which a pixel counts as background.
constexpr double kSegThreshold = 60.0;

// Ranges for domain randomization. Object colors are drawn from a bright
// palette and re-drawn until they sit at least 2*kSegThreshold away from the
// background, so segmentation cannot fail.
struct JitterConfig {
  int bg_lo = 20, bg_hi = 80;
  int obj_jitter = 15;
  double radius_lo = 1.5, radius_hi = 2.5;
  double gain_lo = 0.9, gain_hi = 1.1;
  double noise_lo = 0.0, noise_hi = 10.0;
  double stiff_lo = 0.75, stiff_hi = 1.25;
  double damp_lo = 0.8, damp_hi = 1.25;
  double mass_lo = 0.8, mass_hi = 1.25;
  double fric_lo = 0.8, fric_hi = 1.25;
};

RenderParams sample_render_params(nn::Rng& rng, bool randomize,
                                  const JitterConfig& jc = {});

// Orthographic top-down rasterization: background fill, particles as disks
// and adjacent-particle links as capsules, then brightness gain and bounded
// additive noise seeded from params.noise_seed.
ImageObs render(const EnvState& state, const RenderParams& params,
                int image_size);

// Foreground = RGB distance from params.background exceeds tau.
BinaryMask segment(const ImageObs& obs, const RenderParams& params,
                   double tau = kSegThreshold);

}  // namespace cfm::sim

#endif  // CFM_SIM_RENDER_HPP_
