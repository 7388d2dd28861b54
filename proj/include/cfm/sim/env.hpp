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

#ifndef CFM_SIM_ENV_HPP_
#define CFM_SIM_ENV_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cfm::sim {

enum class EnvKind : uint8_t { kPointmass = 0, kRope = 1, kCloth = 2 };

EnvKind env_from_string(const std::string& s);
std::string to_string(EnvKind k);

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

// Ground-truth particle state. Workspace is the unit square [0,1]^2 on the
// table plane; z >= 0 and is used only by the cloth.
struct EnvState {
  EnvKind kind = EnvKind::kPointmass;
  std::vector<Vec3> pos;
  std::vector<Vec3> vel;
};

int n_particles(EnvKind k);   // 1 / 25 / 81
int action_dims(EnvKind k);   // 2 / 4 / 5

// Pick point in normalized image coordinates plus a delta direction.
// Pointmass actions carry only the delta.
struct PickPlaceAction {
  double pick_u = 0.0, pick_v = 0.0;  // [0,1]
  double dx = 0.0, dy = 0.0, dz = 0.0;  // [-1,1]; dz used by cloth only

  static PickPlaceAction make(EnvKind kind, double pick_u, double pick_v,
                              double dx, double dy, double dz = 0.0);
  // Flat layout used by models and files:
  // pointmass [dx,dy]; rope [u,v,dx,dy]; cloth [u,v,dx,dy,dz].
  std::vector<float> flat(EnvKind kind) const;
  static PickPlaceAction from_flat(EnvKind kind, const float* data);
};

// Per-episode appearance and physics-jitter parameters.
struct RenderParams {
  std::array<uint8_t, 3> background{40, 40, 40};
  std::array<uint8_t, 3> object{230, 60, 60};
  double radius_px = 2.0;
  double gain = 1.0;
  double noise_std = 0.0;
  uint32_t noise_seed = 0;
  // Multipliers applied on top of SimConfig physics constants.
  double k_stiffness = 1.0;
  double k_damping = 1.0;
  double k_mass = 1.0;
  double k_friction = 1.0;
};

struct ImageObs {
  int h = 0, w = 0;
  std::vector<uint8_t> rgb;  // h*w*3, row-major, interleaved
};

struct BinaryMask {
  int h = 0, w = 0;
  std::vector<uint8_t> fg;  // h*w, 0/1
  int area() const;
};

// Physics constants, pinned here rather than claimed equivalent to any
// particular engine. Semi-implicit Euler; a drag phase of drag_substeps
// followed by relax_substeps free substeps.
struct SimConfig {
  double dt = 0.01;
  int drag_substeps = 40;
  int relax_substeps = 60;
  double rope_rest = 0.025;
  double cloth_rest = 0.05;
  double stretch_limit = 1.15;
  double spring_k = 250.0;
  double spring_damp = 3.0;
  double pbd_relax = 0.1;        // positional pull toward rest length per substep
  double velocity_damp = 0.12;   // fraction of velocity removed per substep
  double friction_damp = 0.05;   // extra fraction for particles on the table
  double gravity = 1.5;          // cloth, along -z
  double particle_mass = 1.0;
  double grab_radius = 3.0 / 64.0;
  double move_scale = 5.0 / 64.0;   // delta of 1 -> 5px on a 64px image
  double lift_scale = 5.0 / 64.0;
  double pointmass_delta_scale = 0.2;
  int reset_actions_rope = 120;
  int reset_actions_cloth = 50;
};

EnvState canonical_state(EnvKind kind, const SimConfig& cfg = {});

struct ResetResult {
  EnvState state;
  ImageObs obs;
  RenderParams params;
};

// Canonical state perturbed by the configured number of random actions
// (pointmass: uniform random position). Fully determined by seed.
ResetResult reset(EnvKind kind, uint64_t seed, bool randomize,
                  const SimConfig& cfg = {}, int image_size = 32);

struct StepTrace {
  bool grabbed = false;
  int grabbed_index = -1;
  std::vector<double> relax_kinetic_energy;  // one entry per free substep
};

// Deterministic transition. A pick with no particle within grab_radius is a
// no-op that returns a relaxed copy of the state.
EnvState step(const EnvState& state, const PickPlaceAction& action,
              const RenderParams& params, const SimConfig& cfg = {},
              StepTrace* trace = nullptr);

// Free relaxation only (no grab), exposed for energy tests.
EnvState relax(const EnvState& state, const RenderParams& params,
               const SimConfig& cfg, int substeps,
               std::vector<double>* kinetic_trace = nullptr);

double kinetic_energy(const EnvState& state, const RenderParams& params,
                      const SimConfig& cfg = {});

// Largest gap between adjacent rope particles (or cloth structural
// neighbours), for invariant checks.
double max_adjacent_gap(const EnvState& state, const SimConfig& cfg = {});

}  // namespace cfm::sim

#endif  // CFM_SIM_ENV_HPP_
