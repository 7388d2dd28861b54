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

#include "cfm/sim/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cfm/nn/rng.hpp"
#include "cfm/sim/render.hpp"

namespace cfm::sim {

EnvKind env_from_string(const std::string& s) {
  if (s == "pointmass") return EnvKind::kPointmass;
  if (s == "rope") return EnvKind::kRope;
  if (s == "cloth") return EnvKind::kCloth;
  throw std::invalid_argument("unknown env: " + s);
}

std::string to_string(EnvKind k) {
  switch (k) {
    case EnvKind::kPointmass: return "pointmass";
    case EnvKind::kRope: return "rope";
    case EnvKind::kCloth: return "cloth";
  }
  return "?";
}

int n_particles(EnvKind k) {
  switch (k) {
    case EnvKind::kPointmass: return 1;
    case EnvKind::kRope: return 25;
    case EnvKind::kCloth: return 81;
  }
  return 0;
}

int action_dims(EnvKind k) {
  switch (k) {
    case EnvKind::kPointmass: return 2;
    case EnvKind::kRope: return 4;
    case EnvKind::kCloth: return 5;
  }
  return 0;
}

int BinaryMask::area() const {
  int n = 0;
  for (uint8_t v : fg) n += v ? 1 : 0;
  return n;
}

PickPlaceAction PickPlaceAction::make(EnvKind kind, double pick_u,
                                      double pick_v, double dx, double dy,
                                      double dz) {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  auto in11 = [](double v) { return v >= -1.0 && v <= 1.0; };
  if (kind != EnvKind::kPointmass && (!in01(pick_u) || !in01(pick_v))) {
    throw std::invalid_argument("PickPlaceAction: pick outside [0,1]^2");
  }
  if (!in11(dx) || !in11(dy) || !in11(dz)) {
    throw std::invalid_argument("PickPlaceAction: delta outside [-1,1]");
  }
  if (kind != EnvKind::kCloth && dz != 0.0) {
    throw std::invalid_argument("PickPlaceAction: dz only valid for cloth");
  }
  PickPlaceAction a;
  a.pick_u = kind == EnvKind::kPointmass ? 0.0 : pick_u;
  a.pick_v = kind == EnvKind::kPointmass ? 0.0 : pick_v;
  a.dx = dx;
  a.dy = dy;
  a.dz = dz;
  return a;
}

std::vector<float> PickPlaceAction::flat(EnvKind kind) const {
  switch (kind) {
    case EnvKind::kPointmass:
      return {static_cast<float>(dx), static_cast<float>(dy)};
    case EnvKind::kRope:
      return {static_cast<float>(pick_u), static_cast<float>(pick_v),
              static_cast<float>(dx), static_cast<float>(dy)};
    case EnvKind::kCloth:
      return {static_cast<float>(pick_u), static_cast<float>(pick_v),
              static_cast<float>(dx), static_cast<float>(dy),
              static_cast<float>(dz)};
  }
  return {};
}

PickPlaceAction PickPlaceAction::from_flat(EnvKind kind, const float* d) {
  switch (kind) {
    case EnvKind::kPointmass:
      return make(kind, 0, 0, d[0], d[1]);
    case EnvKind::kRope:
      return make(kind, d[0], d[1], d[2], d[3]);
    case EnvKind::kCloth:
      return make(kind, d[0], d[1], d[2], d[3], d[4]);
  }
  throw std::invalid_argument("from_flat: bad kind");
}

EnvState canonical_state(EnvKind kind, const SimConfig& cfg) {
  EnvState s;
  s.kind = kind;
  int n = n_particles(kind);
  s.pos.assign(static_cast<size_t>(n), Vec3{});
  s.vel.assign(static_cast<size_t>(n), Vec3{});
  switch (kind) {
    case EnvKind::kPointmass:
      s.pos[0] = {0.5, 0.5, 0.0};
      break;
    case EnvKind::kRope: {
      double half = 12.0 * cfg.rope_rest;
      for (int i = 0; i < n; ++i) {
        s.pos[static_cast<size_t>(i)] = {0.5 - half + cfg.rope_rest * i, 0.5, 0.0};
      }
      break;
    }
    case EnvKind::kCloth: {
      int g = 9;
      for (int r = 0; r < g; ++r) {
        for (int c = 0; c < g; ++c) {
          s.pos[static_cast<size_t>(r * g + c)] = {0.5 + (c - 4) * cfg.cloth_rest,
                                                   0.5 + (r - 4) * cfg.cloth_rest,
                                                   0.0};
        }
      }
      break;
    }
  }
  return s;
}

namespace {

struct Spring {
  int a, b;
  double rest;
  bool structural;
};

std::vector<Spring> make_springs(EnvKind kind, const SimConfig& cfg) {
  std::vector<Spring> sp;
  if (kind == EnvKind::kRope) {
    sp.reserve(24);
    for (int i = 0; i + 1 < 25; ++i) sp.push_back({i, i + 1, cfg.rope_rest, true});
  } else if (kind == EnvKind::kCloth) {
    const int g = 9;
    const double diag = cfg.cloth_rest * std::sqrt(2.0);
    for (int r = 0; r < g; ++r) {
      for (int c = 0; c < g; ++c) {
        int i = r * g + c;
        if (c + 1 < g) sp.push_back({i, i + 1, cfg.cloth_rest, true});
        if (r + 1 < g) sp.push_back({i, i + g, cfg.cloth_rest, true});
        if (r + 1 < g && c + 1 < g) {
          sp.push_back({i, i + g + 1, diag, false});
          sp.push_back({i + 1, i + g, diag, false});
        }
      }
    }
  }
  return sp;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

class Engine {
 public:
  Engine(EnvKind kind, const RenderParams& par, const SimConfig& cfg)
      : kind_(kind),
        cfg_(cfg),
        springs_(make_springs(kind, cfg)),
        mass_(cfg.particle_mass * par.k_mass),
        k_(cfg.spring_k * par.k_stiffness),
        kd_(cfg.spring_damp),
        damp_mult_(std::max(0.05, 1.0 - cfg.velocity_damp * par.k_damping)),
        fric_mult_(std::max(0.05, 1.0 - cfg.friction_damp * par.k_friction)) {}

  double kinetic(const EnvState& s) const {
    double ke = 0.0;
    for (const auto& v : s.vel) ke += 0.5 * mass_ * (v.x * v.x + v.y * v.y + v.z * v.z);
    return ke;
  }

  // One semi-implicit Euler substep. grabbed < 0 for free motion. When
  // ke_cap is non-null the substep never increases kinetic energy above
  // *ke_cap (purely extra dissipation), and *ke_cap is updated.
  void substep(EnvState& s, int grabbed, const Vec3* grab_pos,
               const Vec3* grab_vel, double* ke_cap) {
    const int n = static_cast<int>(s.pos.size());
    forces_.assign(static_cast<size_t>(n), Vec3{});
    for (const auto& sp : springs_) {
      const Vec3& pa = s.pos[static_cast<size_t>(sp.a)];
      const Vec3& pb = s.pos[static_cast<size_t>(sp.b)];
      double dx = pb.x - pa.x, dy = pb.y - pa.y, dz = pb.z - pa.z;
      double len = std::sqrt(dx * dx + dy * dy + dz * dz);
      if (len < 1e-12) continue;
      double ux = dx / len, uy = dy / len, uz = dz / len;
      const Vec3& va = s.vel[static_cast<size_t>(sp.a)];
      const Vec3& vb = s.vel[static_cast<size_t>(sp.b)];
      double relv = (vb.x - va.x) * ux + (vb.y - va.y) * uy + (vb.z - va.z) * uz;
      double f = k_ * (len - sp.rest) + kd_ * relv;
      forces_[static_cast<size_t>(sp.a)].x += f * ux;
      forces_[static_cast<size_t>(sp.a)].y += f * uy;
      forces_[static_cast<size_t>(sp.a)].z += f * uz;
      forces_[static_cast<size_t>(sp.b)].x -= f * ux;
      forces_[static_cast<size_t>(sp.b)].y -= f * uy;
      forces_[static_cast<size_t>(sp.b)].z -= f * uz;
    }
    if (kind_ == EnvKind::kCloth) {
      for (auto& f : forces_) f.z -= cfg_.gravity * mass_;
    }
    for (int i = 0; i < n; ++i) {
      if (i == grabbed) continue;
      Vec3& v = s.vel[static_cast<size_t>(i)];
      const Vec3& f = forces_[static_cast<size_t>(i)];
      v.x = (v.x + cfg_.dt * f.x / mass_) * damp_mult_;
      v.y = (v.y + cfg_.dt * f.y / mass_) * damp_mult_;
      v.z = (v.z + cfg_.dt * f.z / mass_) * damp_mult_;
      if (kind_ != EnvKind::kCloth || s.pos[static_cast<size_t>(i)].z <= 1e-9) {
        v.x *= fric_mult_;
        v.y *= fric_mult_;
        v.z *= fric_mult_;
      }
    }
    if (ke_cap != nullptr) {
      double ke = kinetic(s);
      if (ke > *ke_cap) {
        double scale = *ke_cap > 0.0 ? std::sqrt(*ke_cap / ke) : 0.0;
        for (auto& v : s.vel) {
          v.x *= scale;
          v.y *= scale;
          v.z *= scale;
        }
      }
      *ke_cap = kinetic(s);
    }
    for (int i = 0; i < n; ++i) {
      if (i == grabbed) continue;
      Vec3& p = s.pos[static_cast<size_t>(i)];
      const Vec3& v = s.vel[static_cast<size_t>(i)];
      p.x += cfg_.dt * v.x;
      p.y += cfg_.dt * v.y;
      p.z += cfg_.dt * v.z;
    }
    if (grabbed >= 0) {
      s.pos[static_cast<size_t>(grabbed)] = *grab_pos;
      s.vel[static_cast<size_t>(grabbed)] = *grab_vel;
    }
    contain(s, grabbed);
    pbd_pass(s, grabbed);
    contain(s, grabbed);
    project_strain(s, grabbed);
  }

  // Position-based pull of every structural spring toward its rest length.
  // Velocities are untouched, so this only ever removes elastic energy.
  void pbd_pass(EnvState& s, int grabbed) const {
    const double a = cfg_.pbd_relax;
    if (a <= 0.0) return;
    for (const auto& sp : springs_) {
      if (!sp.structural) continue;
      Vec3& pa = s.pos[static_cast<size_t>(sp.a)];
      Vec3& pb = s.pos[static_cast<size_t>(sp.b)];
      double dx = pb.x - pa.x, dy = pb.y - pa.y, dz = pb.z - pa.z;
      double len = std::sqrt(dx * dx + dy * dy + dz * dz);
      if (len < 1e-12) continue;
      double corr = a * (len - sp.rest) / len;
      double ex = dx * corr, ey = dy * corr, ez = dz * corr;
      if (sp.a == grabbed) {
        pb.x -= ex; pb.y -= ey; pb.z -= ez;
      } else if (sp.b == grabbed) {
        pa.x += ex; pa.y += ey; pa.z += ez;
      } else {
        pa.x += ex * 0.5; pa.y += ey * 0.5; pa.z += ez * 0.5;
        pb.x -= ex * 0.5; pb.y -= ey * 0.5; pb.z -= ez * 0.5;
      }
    }
  }

  void contain(EnvState& s, int grabbed) const {
    const int n = static_cast<int>(s.pos.size());
    for (int i = 0; i < n; ++i) {
      Vec3& p = s.pos[static_cast<size_t>(i)];
      Vec3& v = s.vel[static_cast<size_t>(i)];
      if (p.x < 0.0 || p.x > 1.0) {
        p.x = clamp01(p.x);
        if (i != grabbed) v.x = 0.0;
      }
      if (p.y < 0.0 || p.y > 1.0) {
        p.y = clamp01(p.y);
        if (i != grabbed) v.y = 0.0;
      }
      if (kind_ == EnvKind::kCloth) {
        if (p.z < 0.0) {
          p.z = 0.0;
          if (i != grabbed) v.z = 0.0;
        }
      } else {
        p.z = 0.0;
      }
    }
  }

  // Position-based strain limiting over structural springs. Moves points
  // along the spring axis only, which cannot leave the workspace.
  void project_strain(EnvState& s, int grabbed) const {
    for (int iter = 0; iter < 100; ++iter) {
      double worst = 0.0;
      for (const auto& sp : springs_) {
        if (!sp.structural) continue;
        const double maxlen = sp.rest * cfg_.stretch_limit;
        Vec3& pa = s.pos[static_cast<size_t>(sp.a)];
        Vec3& pb = s.pos[static_cast<size_t>(sp.b)];
        double dx = pb.x - pa.x, dy = pb.y - pa.y, dz = pb.z - pa.z;
        double len = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (len <= maxlen) continue;
        worst = std::max(worst, len - maxlen);
        double ex = dx / len * (len - maxlen);
        double ey = dy / len * (len - maxlen);
        double ez = dz / len * (len - maxlen);
        if (sp.a == grabbed) {
          pb.x -= ex; pb.y -= ey; pb.z -= ez;
        } else if (sp.b == grabbed) {
          pa.x += ex; pa.y += ey; pa.z += ez;
        } else {
          pa.x += ex * 0.5; pa.y += ey * 0.5; pa.z += ez * 0.5;
          pb.x -= ex * 0.5; pb.y -= ey * 0.5; pb.z -= ez * 0.5;
        }
      }
      if (worst < 1e-12) break;
    }
  }

 private:
  EnvKind kind_;
  const SimConfig& cfg_;
  std::vector<Spring> springs_;
  double mass_, k_, kd_, damp_mult_, fric_mult_;
  std::vector<Vec3> forces_;
};

}  // namespace

double kinetic_energy(const EnvState& state, const RenderParams& params,
                      const SimConfig& cfg) {
  return Engine(state.kind, params, cfg).kinetic(state);
}

double max_adjacent_gap(const EnvState& state, const SimConfig& cfg) {
  Engine eng(state.kind, RenderParams{}, cfg);
  double worst = 0.0;
  for (const auto& sp : make_springs(state.kind, cfg)) {
    if (!sp.structural) continue;
    const Vec3& a = state.pos[static_cast<size_t>(sp.a)];
    const Vec3& b = state.pos[static_cast<size_t>(sp.b)];
    double dx = b.x - a.x, dy = b.y - a.y, dz = b.z - a.z;
    worst = std::max(worst, std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  (void)eng;
  return worst;
}

EnvState relax(const EnvState& state, const RenderParams& params,
               const SimConfig& cfg, int substeps,
               std::vector<double>* kinetic_trace) {
  EnvState s = state;
  if (state.kind == EnvKind::kPointmass) {
    if (kinetic_trace) kinetic_trace->assign(static_cast<size_t>(substeps), 0.0);
    return s;
  }
  Engine eng(state.kind, params, cfg);
  double ke_cap = eng.kinetic(s);
  for (int i = 0; i < substeps; ++i) {
    eng.substep(s, -1, nullptr, nullptr, &ke_cap);
    if (kinetic_trace) kinetic_trace->push_back(ke_cap);
  }
  return s;
}

EnvState step(const EnvState& state, const PickPlaceAction& action,
              const RenderParams& params, const SimConfig& cfg,
              StepTrace* trace) {
  if (static_cast<int>(state.pos.size()) != n_particles(state.kind)) {
    throw std::invalid_argument("step: state particle count mismatch");
  }
  if (state.kind == EnvKind::kPointmass) {
    EnvState s = state;
    s.pos[0].x = clamp01(s.pos[0].x + cfg.pointmass_delta_scale * action.dx);
    s.pos[0].y = clamp01(s.pos[0].y + cfg.pointmass_delta_scale * action.dy);
    s.vel[0] = Vec3{};
    if (trace) {
      trace->grabbed = true;
      trace->grabbed_index = 0;
      trace->relax_kinetic_energy.clear();
    }
    return s;
  }

  // Nearest particle to the pick point, in the table plane.
  int g = -1;
  double best = cfg.grab_radius;
  for (size_t i = 0; i < state.pos.size(); ++i) {
    double dx = state.pos[i].x - action.pick_u;
    double dy = state.pos[i].y - action.pick_v;
    double d = std::sqrt(dx * dx + dy * dy);
    if (d <= best) {
      best = d;
      g = static_cast<int>(i);
    }
  }
  if (g < 0) {
    EnvState s = relax(state, params, cfg, cfg.relax_substeps,
                       trace ? &trace->relax_kinetic_energy : nullptr);
    if (trace) {
      trace->grabbed = false;
      trace->grabbed_index = -1;
    }
    return s;
  }

  EnvState s = state;
  Engine eng(state.kind, params, cfg);
  const Vec3 start = s.pos[static_cast<size_t>(g)];
  Vec3 target;
  target.x = clamp01(action.pick_u + action.dx * cfg.move_scale);
  target.y = clamp01(action.pick_v + action.dy * cfg.move_scale);
  target.z = state.kind == EnvKind::kCloth
                 ? std::max(0.0, action.dz) * cfg.lift_scale
                 : 0.0;
  Vec3 prev = start;
  for (int t = 1; t <= cfg.drag_substeps; ++t) {
    double f = static_cast<double>(t) / cfg.drag_substeps;
    Vec3 p{start.x + (target.x - start.x) * f, start.y + (target.y - start.y) * f,
           start.z + (target.z - start.z) * f};
    Vec3 v{(p.x - prev.x) / cfg.dt, (p.y - prev.y) / cfg.dt,
           (p.z - prev.z) / cfg.dt};
    eng.substep(s, g, &p, &v, nullptr);
    prev = p;
  }
  if (trace) {
    trace->grabbed = true;
    trace->grabbed_index = g;
    trace->relax_kinetic_energy.clear();
  }
  double ke_cap = eng.kinetic(s);
  for (int r = 0; r < cfg.relax_substeps; ++r) {
    eng.substep(s, -1, nullptr, nullptr, &ke_cap);
    if (trace) trace->relax_kinetic_energy.push_back(ke_cap);
  }
  return s;
}

ResetResult reset(EnvKind kind, uint64_t seed, bool randomize,
                  const SimConfig& cfg, int image_size) {
  nn::Rng root(nn::Rng::mix(seed, static_cast<uint64_t>(kind) + 1));
  nn::Rng params_rng = root.split(1);
  nn::Rng motion = root.split(2);

  ResetResult out;
  out.params = sample_render_params(params_rng, randomize);
  out.state = canonical_state(kind, cfg);
  if (kind == EnvKind::kPointmass) {
    out.state.pos[0].x = motion.uniform();
    out.state.pos[0].y = motion.uniform();
  } else {
    const int n_actions = kind == EnvKind::kRope ? cfg.reset_actions_rope
                                                 : cfg.reset_actions_cloth;
    for (int i = 0; i < n_actions; ++i) {
      int idx = motion.uniform_int(n_particles(kind));
      double u = clamp01(out.state.pos[static_cast<size_t>(idx)].x);
      double v = clamp01(out.state.pos[static_cast<size_t>(idx)].y);
      double dx = motion.uniform(-1.0, 1.0);
      double dy = motion.uniform(-1.0, 1.0);
      double dz = kind == EnvKind::kCloth ? motion.uniform(-1.0, 1.0) : 0.0;
      out.state = step(out.state, PickPlaceAction::make(kind, u, v, dx, dy, dz),
                       out.params, cfg);
    }
  }
  out.obs = render(out.state, out.params, image_size);
  return out;
}

}  // namespace cfm::sim
