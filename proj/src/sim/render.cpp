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

#include "cfm/sim/render.hpp"

#include <algorithm>
#include <cmath>

namespace cfm::sim {

namespace {

constexpr std::array<std::array<uint8_t, 3>, 6> kPalette{{
    {230, 60, 60},
    {60, 230, 60},
    {80, 120, 240},
    {235, 215, 60},
    {220, 70, 220},
    {60, 225, 225},
}};

double rgb_dist(const std::array<uint8_t, 3>& a, const std::array<uint8_t, 3>& b) {
  double dr = static_cast<double>(a[0]) - b[0];
  double dg = static_cast<double>(a[1]) - b[1];
  double db = static_cast<double>(a[2]) - b[2];
  return std::sqrt(dr * dr + dg * dg + db * db);
}

uint8_t clamp_u8(long v) {
  return static_cast<uint8_t>(std::min(255l, std::max(0l, v)));
}

// Fills every pixel whose center lies within radius of segment ab (pixel
// coordinates).
void draw_capsule(ImageObs& img, double ax, double ay, double bx, double by,
                  double radius, const std::array<uint8_t, 3>& color) {
  const double r2 = radius * radius;
  int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - radius)));
  int x1 = std::min(img.w - 1, static_cast<int>(std::ceil(std::max(ax, bx) + radius)));
  int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - radius)));
  int y1 = std::min(img.h - 1, static_cast<int>(std::ceil(std::max(ay, by) + radius)));
  const double abx = bx - ax, aby = by - ay;
  const double ab2 = abx * abx + aby * aby;
  for (int py = y0; py <= y1; ++py) {
    for (int px = x0; px <= x1; ++px) {
      double apx = px - ax, apy = py - ay;
      double t = ab2 > 0.0 ? std::min(1.0, std::max(0.0, (apx * abx + apy * aby) / ab2)) : 0.0;
      double cx = ax + t * abx - px;
      double cy = ay + t * aby - py;
      if (cx * cx + cy * cy <= r2) {
        uint8_t* p = img.rgb.data() + (static_cast<size_t>(py) * img.w + px) * 3;
        p[0] = color[0];
        p[1] = color[1];
        p[2] = color[2];
      }
    }
  }
}

}  // namespace

RenderParams sample_render_params(nn::Rng& rng, bool randomize,
                                  const JitterConfig& jc) {
  RenderParams p;  // defaults are the canonical values
  if (!randomize) return p;
  for (int c = 0; c < 3; ++c) {
    p.background[static_cast<size_t>(c)] =
        static_cast<uint8_t>(jc.bg_lo + rng.uniform_int(jc.bg_hi - jc.bg_lo + 1));
  }
  int base = rng.uniform_int(static_cast<int>(kPalette.size()));
  bool ok = false;
  for (int attempt = 0; attempt < 12 && !ok; ++attempt) {
    auto cand = kPalette[static_cast<size_t>((base + attempt) % kPalette.size())];
    for (int c = 0; c < 3; ++c) {
      int j = rng.uniform_int(2 * jc.obj_jitter + 1) - jc.obj_jitter;
      cand[static_cast<size_t>(c)] = clamp_u8(static_cast<long>(cand[static_cast<size_t>(c)]) + j);
    }
    if (rgb_dist(cand, p.background) >= 2.0 * kSegThreshold) {
      p.object = cand;
      ok = true;
    }
  }
  if (!ok) {
    // Fall back to the plain palette entry farthest from the background.
    double best = -1.0;
    for (const auto& c : kPalette) {
      double d = rgb_dist(c, p.background);
      if (d > best) {
        best = d;
        p.object = c;
      }
    }
  }
  // Continuous fields are quantized to f32 so dataset files, which store
  // them as f32, replay the exact physics that produced them.
  auto q = [](double v) { return static_cast<double>(static_cast<float>(v)); };
  p.radius_px = q(rng.uniform(jc.radius_lo, jc.radius_hi));
  p.gain = q(rng.uniform(jc.gain_lo, jc.gain_hi));
  p.noise_std = q(rng.uniform(jc.noise_lo, jc.noise_hi));
  p.noise_seed = static_cast<uint32_t>(rng.next_u64());
  p.k_stiffness = q(rng.uniform(jc.stiff_lo, jc.stiff_hi));
  p.k_damping = q(rng.uniform(jc.damp_lo, jc.damp_hi));
  p.k_mass = q(rng.uniform(jc.mass_lo, jc.mass_hi));
  p.k_friction = q(rng.uniform(jc.fric_lo, jc.fric_hi));
  return p;
}

ImageObs render(const EnvState& state, const RenderParams& params,
                int image_size) {
  if (image_size != 16 && image_size != 32 && image_size != 64) {
    throw std::invalid_argument("render: image size must be 16, 32 or 64");
  }
  ImageObs img;
  img.h = img.w = image_size;
  img.rgb.resize(static_cast<size_t>(image_size) * image_size * 3);
  for (size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = params.background[0];
    img.rgb[i + 1] = params.background[1];
    img.rgb[i + 2] = params.background[2];
  }

  auto to_px = [image_size](double w) { return w * image_size - 0.5; };
  const double r = std::max(1.0, params.radius_px);

  for (const auto& p : state.pos) {
    draw_capsule(img, to_px(p.x), to_px(p.y), to_px(p.x), to_px(p.y), r,
                 params.object);
  }
  if (state.kind == EnvKind::kRope) {
    for (size_t i = 0; i + 1 < state.pos.size(); ++i) {
      draw_capsule(img, to_px(state.pos[i].x), to_px(state.pos[i].y),
                   to_px(state.pos[i + 1].x), to_px(state.pos[i + 1].y), r,
                   params.object);
    }
  } else if (state.kind == EnvKind::kCloth) {
    const int g = 9;
    for (int row = 0; row < g; ++row) {
      for (int col = 0; col < g; ++col) {
        const auto& a = state.pos[static_cast<size_t>(row * g + col)];
        if (col + 1 < g) {
          const auto& b = state.pos[static_cast<size_t>(row * g + col + 1)];
          draw_capsule(img, to_px(a.x), to_px(a.y), to_px(b.x), to_px(b.y), r,
                       params.object);
        }
        if (row + 1 < g) {
          const auto& b = state.pos[static_cast<size_t>((row + 1) * g + col)];
          draw_capsule(img, to_px(a.x), to_px(a.y), to_px(b.x), to_px(b.y), r,
                       params.object);
        }
      }
    }
  }

  if (params.gain != 1.0) {
    for (auto& v : img.rgb) {
      v = clamp_u8(std::lround(static_cast<double>(v) * params.gain));
    }
  }
  const long amp = std::lround(params.noise_std * std::sqrt(3.0));
  if (amp > 0) {
    nn::Rng noise(params.noise_seed);
    for (auto& v : img.rgb) {
      long n = noise.uniform_int(static_cast<int>(2 * amp + 1)) - amp;
      v = clamp_u8(static_cast<long>(v) + n);
    }
  }
  return img;
}

BinaryMask segment(const ImageObs& obs, const RenderParams& params, double tau) {
  BinaryMask m;
  m.h = obs.h;
  m.w = obs.w;
  m.fg.resize(static_cast<size_t>(obs.h) * obs.w);
  const double tau2 = tau * tau;
  for (size_t i = 0; i < m.fg.size(); ++i) {
    const uint8_t* p = obs.rgb.data() + i * 3;
    double dr = static_cast<double>(p[0]) - params.background[0];
    double dg = static_cast<double>(p[1]) - params.background[1];
    double db = static_cast<double>(p[2]) - params.background[2];
    m.fg[i] = (dr * dr + dg * dg + db * db > tau2) ? 1 : 0;
  }
  return m;
}

}  // namespace cfm::sim
