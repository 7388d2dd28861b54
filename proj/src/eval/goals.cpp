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

#include "cfm/eval/goals.hpp"

#include <cmath>
#include <stdexcept>

#include "cfm/sim/render.hpp"

namespace cfm::eval {

GoalId goal_from_string(const std::string& s) {
  if (s == "horizontal") return GoalId::kHorizontal;
  if (s == "vertical") return GoalId::kVertical;
  if (s == "diag45") return GoalId::kDiag45;
  if (s == "diag135") return GoalId::kDiag135;
  if (s == "squiggle") return GoalId::kSquiggle;
  if (s == "random") return GoalId::kRandom;
  if (s == "flat") return GoalId::kFlat;
  if (s == "center") return GoalId::kCenter;
  throw std::invalid_argument("unknown goal: " + s);
}

std::string to_string(GoalId id) {
  switch (id) {
    case GoalId::kHorizontal: return "horizontal";
    case GoalId::kVertical: return "vertical";
    case GoalId::kDiag45: return "diag45";
    case GoalId::kDiag135: return "diag135";
    case GoalId::kSquiggle: return "squiggle";
    case GoalId::kRandom: return "random";
    case GoalId::kFlat: return "flat";
    case GoalId::kCenter: return "center";
  }
  return "?";
}

namespace {

bool valid_for(sim::EnvKind env, GoalId id) {
  switch (env) {
    case sim::EnvKind::kRope:
      return id == GoalId::kHorizontal || id == GoalId::kVertical ||
             id == GoalId::kDiag45 || id == GoalId::kDiag135 ||
             id == GoalId::kSquiggle || id == GoalId::kRandom;
    case sim::EnvKind::kCloth:
      return id == GoalId::kFlat || id == GoalId::kRandom;
    case sim::EnvKind::kPointmass:
      return id == GoalId::kCenter || id == GoalId::kRandom;
  }
  return false;
}

sim::EnvState rope_line(double dir_x, double dir_y, const sim::SimConfig& cfg) {
  sim::EnvState s;
  s.kind = sim::EnvKind::kRope;
  const int n = sim::n_particles(s.kind);
  s.pos.resize(static_cast<size_t>(n));
  s.vel.assign(static_cast<size_t>(n), sim::Vec3{});
  for (int i = 0; i < n; ++i) {
    double t = (i - 12) * cfg.rope_rest;
    s.pos[static_cast<size_t>(i)] = {0.5 + t * dir_x, 0.5 + t * dir_y, 0.0};
  }
  return s;
}

// Fixed sinusoid of 1.5 periods; 25 particles at rest arc spacing so the
// goal is an unstretched rope. The spec's nominal amplitude 0.15 would make
// the minimum possible arc length 0.9 > rope length 0.6, so amplitude 0.08
// is used and the horizontal span solved so the total arc equals 24*rest.
sim::EnvState rope_squiggle(const sim::SimConfig& cfg) {
  const double amplitude = 0.08;
  const double periods = 1.5;
  const double target_arc = 24.0 * cfg.rope_rest;

  auto arc_length = [&](double span) {
    const int steps = 4000;
    double total = 0.0;
    double px = 0.0, py = 0.0;
    for (int i = 0; i <= steps; ++i) {
      double t = static_cast<double>(i) / steps;
      double x = span * t;
      double y = amplitude * std::sin(2.0 * M_PI * periods * t);
      if (i > 0) total += std::hypot(x - px, y - py);
      px = x;
      py = y;
    }
    return total;
  };

  double lo = 1e-6, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (arc_length(mid) < target_arc ? lo : hi) = mid;
  }
  const double span = 0.5 * (lo + hi);

  // Walk the curve and drop a particle every rest_length of arc.
  sim::EnvState s;
  s.kind = sim::EnvKind::kRope;
  const int n = sim::n_particles(s.kind);
  s.vel.assign(static_cast<size_t>(n), sim::Vec3{});
  s.pos.reserve(static_cast<size_t>(n));
  const int steps = 40000;
  double acc = 0.0;
  double px = 0.0, py = 0.0;
  auto point = [&](double t) {
    return std::pair<double, double>{
        0.5 - span / 2.0 + span * t,
        0.5 + amplitude * std::sin(2.0 * M_PI * periods * t)};
  };
  auto [x0, y0] = point(0.0);
  s.pos.push_back({x0, y0, 0.0});
  px = x0;
  py = y0;
  double next_at = cfg.rope_rest;
  for (int i = 1; i <= steps && static_cast<int>(s.pos.size()) < n; ++i) {
    double t = static_cast<double>(i) / steps;
    auto [x, y] = point(t);
    acc += std::hypot(x - px, y - py);
    while (acc >= next_at && static_cast<int>(s.pos.size()) < n) {
      s.pos.push_back({x, y, 0.0});
      next_at += cfg.rope_rest;
    }
    px = x;
    py = y;
  }
  while (static_cast<int>(s.pos.size()) < n) s.pos.push_back({px, py, 0.0});
  return s;
}

}  // namespace

Goal make_goal(const GoalSpec& spec, int image_size, const sim::SimConfig& cfg) {
  if (!valid_for(spec.env, spec.id)) {
    throw std::invalid_argument("goal " + to_string(spec.id) +
                                " is not valid for env " + sim::to_string(spec.env));
  }
  Goal g;
  switch (spec.id) {
    case GoalId::kHorizontal:
      g.state = rope_line(1.0, 0.0, cfg);
      break;
    case GoalId::kVertical:
      g.state = rope_line(0.0, 1.0, cfg);
      break;
    case GoalId::kDiag45:
      g.state = rope_line(std::sqrt(0.5), std::sqrt(0.5), cfg);
      break;
    case GoalId::kDiag135:
      g.state = rope_line(-std::sqrt(0.5), std::sqrt(0.5), cfg);
      break;
    case GoalId::kSquiggle:
      g.state = rope_squiggle(cfg);
      break;
    case GoalId::kFlat:
      g.state = sim::canonical_state(sim::EnvKind::kCloth, cfg);
      break;
    case GoalId::kCenter:
      g.state = sim::canonical_state(sim::EnvKind::kPointmass, cfg);
      break;
    case GoalId::kRandom:
      g.state = sim::reset(spec.env, spec.seed, false, cfg, image_size).state;
      break;
  }
  g.obs = sim::render(g.state, sim::RenderParams{}, image_size);
  return g;
}

}  // namespace cfm::eval
