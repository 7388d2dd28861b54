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

#include "cfm/data/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "cfm/nn/thread_pool.hpp"
#include "cfm/sim/render.hpp"

namespace cfm::data {

namespace {

constexpr uint32_t kVersion = 1;
constexpr char kMagic[4] = {'C', 'F', 'M', 'D'};

// Little-endian writers/readers, independent of host byte order.
void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }
void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}
void put_f32(std::vector<uint8_t>& out, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

class Reader {
 public:
  Reader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
  uint8_t u8() { return *take(1); }
  uint16_t u16() {
    const uint8_t* b = take(2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }
  uint32_t u32() {
    const uint8_t* b = take(4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }
  float f32() {
    uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  const uint8_t* take(size_t n) {
    if (pos_ + n > n_) {
      throw IoError(IoError::Kind::kTruncated, "unexpected end of data");
    }
    const uint8_t* r = p_ + pos_;
    pos_ += n;
    return r;
  }
  size_t remaining() const { return n_ - pos_; }

 private:
  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
};

void put_params(std::vector<uint8_t>& out, const sim::RenderParams& p) {
  for (int c = 0; c < 3; ++c) put_f32(out, p.background[static_cast<size_t>(c)]);
  for (int c = 0; c < 3; ++c) put_f32(out, p.object[static_cast<size_t>(c)]);
  put_f32(out, static_cast<float>(p.radius_px));
  put_f32(out, static_cast<float>(p.gain));
  put_f32(out, static_cast<float>(p.noise_std));
  put_f32(out, static_cast<float>(p.k_stiffness));
  put_f32(out, static_cast<float>(p.k_damping));
  put_f32(out, static_cast<float>(p.k_mass));
  put_f32(out, static_cast<float>(p.k_friction));
  put_u32(out, p.noise_seed);
}

sim::RenderParams read_params(Reader& r) {
  sim::RenderParams p;
  for (int c = 0; c < 3; ++c) {
    p.background[static_cast<size_t>(c)] = static_cast<uint8_t>(r.f32());
  }
  for (int c = 0; c < 3; ++c) {
    p.object[static_cast<size_t>(c)] = static_cast<uint8_t>(r.f32());
  }
  p.radius_px = r.f32();
  p.gain = r.f32();
  p.noise_std = r.f32();
  p.k_stiffness = r.f32();
  p.k_damping = r.f32();
  p.k_mass = r.f32();
  p.k_friction = r.f32();
  p.noise_seed = r.u32();
  return p;
}

std::vector<float> state_to_floats(const sim::EnvState& s) {
  std::vector<float> out;
  out.reserve(s.pos.size() * 6);
  for (size_t i = 0; i < s.pos.size(); ++i) {
    out.push_back(static_cast<float>(s.pos[i].x));
    out.push_back(static_cast<float>(s.pos[i].y));
    out.push_back(static_cast<float>(s.pos[i].z));
    out.push_back(static_cast<float>(s.vel[i].x));
    out.push_back(static_cast<float>(s.vel[i].y));
    out.push_back(static_cast<float>(s.vel[i].z));
  }
  return out;
}

}  // namespace

Dataset::Dataset(sim::EnvKind kind, int image_size, int traj_len,
                 std::vector<Trajectory> trajs)
    : kind_(kind), image_size_(image_size), traj_len_(traj_len),
      trajs_(std::move(trajs)) {}

sim::EnvState Dataset::state_at(int traj, int step) const {
  const auto& t = trajs_.at(static_cast<size_t>(traj));
  const int n = sim::n_particles(kind_);
  sim::EnvState s;
  s.kind = kind_;
  s.pos.resize(static_cast<size_t>(n));
  s.vel.resize(static_cast<size_t>(n));
  const float* f = t.states.data() + static_cast<int64_t>(step) * n * 6;
  for (int i = 0; i < n; ++i) {
    s.pos[static_cast<size_t>(i)] = {f[i * 6 + 0], f[i * 6 + 1], f[i * 6 + 2]};
    s.vel[static_cast<size_t>(i)] = {f[i * 6 + 3], f[i * 6 + 4], f[i * 6 + 5]};
  }
  return s;
}

std::vector<uint8_t> Dataset::to_bytes() const {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u8(out, static_cast<uint8_t>(kind_));
  put_u16(out, static_cast<uint16_t>(image_size_));
  put_u16(out, static_cast<uint16_t>(image_size_));
  put_u8(out, static_cast<uint8_t>(action_dim()));
  put_u32(out, static_cast<uint32_t>(trajs_.size()));
  put_u32(out, static_cast<uint32_t>(traj_len_));
  for (const auto& t : trajs_) {
    put_params(out, t.params);
    out.insert(out.end(), t.images.begin(), t.images.end());
    for (float a : t.actions) put_f32(out, a);
    for (float s : t.states) put_f32(out, s);
  }
  return out;
}

Dataset Dataset::from_bytes(const std::vector<uint8_t>& bytes) {
  Reader r(bytes.data(), bytes.size());
  const uint8_t* magic = r.take(4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError(IoError::Kind::kBadMagic, "bad magic: not a CFMD file");
  }
  uint32_t version = r.u32();
  if (version != kVersion) {
    throw IoError(IoError::Kind::kBadVersion,
                  "unsupported CFMD version " + std::to_string(version));
  }
  uint8_t kind_raw = r.u8();
  if (kind_raw > 2) {
    throw IoError(IoError::Kind::kBadValue, "bad env kind byte");
  }
  sim::EnvKind kind = static_cast<sim::EnvKind>(kind_raw);
  int h = r.u16();
  int w = r.u16();
  if (h != w || (h != 16 && h != 32 && h != 64)) {
    throw IoError(IoError::Kind::kBadValue, "bad image size");
  }
  int adim = r.u8();
  if (adim != sim::action_dims(kind)) {
    throw IoError(IoError::Kind::kBadValue, "action dim mismatch for env");
  }
  uint32_t n_traj = r.u32();
  uint32_t traj_len = r.u32();
  if (traj_len == 0) {
    throw IoError(IoError::Kind::kBadValue, "zero trajectory length");
  }
  const int np = sim::n_particles(kind);
  std::vector<Trajectory> trajs;
  trajs.reserve(n_traj);
  for (uint32_t ti = 0; ti < n_traj; ++ti) {
    Trajectory t;
    t.params = read_params(r);
    size_t img_bytes = static_cast<size_t>(traj_len + 1) * h * w * 3;
    const uint8_t* imgs = r.take(img_bytes);
    t.images.assign(imgs, imgs + img_bytes);
    t.actions.resize(static_cast<size_t>(traj_len) * static_cast<size_t>(adim));
    for (auto& a : t.actions) a = r.f32();
    t.states.resize(static_cast<size_t>(traj_len + 1) * static_cast<size_t>(np) * 6);
    for (auto& s : t.states) s = r.f32();
    trajs.push_back(std::move(t));
  }
  if (r.remaining() != 0) {
    throw IoError(IoError::Kind::kBadValue, "trailing bytes after payload");
  }
  return Dataset(kind, h, static_cast<int>(traj_len), std::move(trajs));
}

void Dataset::save(const std::string& path) const {
  auto bytes = to_bytes();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

Dataset Dataset::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

const uint8_t* TransitionView::obs_t(int64_t i) const {
  auto [traj, step] = provenance(i);
  const auto& t = d_->trajectories()[static_cast<size_t>(traj)];
  return t.images.data() +
         static_cast<int64_t>(step) * d_->image_size() * d_->image_size() * 3;
}

const uint8_t* TransitionView::obs_tp1(int64_t i) const {
  auto [traj, step] = provenance(i);
  const auto& t = d_->trajectories()[static_cast<size_t>(traj)];
  return t.images.data() +
         static_cast<int64_t>(step + 1) * d_->image_size() * d_->image_size() * 3;
}

const float* TransitionView::action(int64_t i) const {
  auto [traj, step] = provenance(i);
  const auto& t = d_->trajectories()[static_cast<size_t>(traj)];
  return t.actions.data() + static_cast<int64_t>(step) * d_->action_dim();
}

Dataset collect_random(sim::EnvKind kind, int n_traj, int traj_len,
                       uint64_t seed, bool randomize, int image_size,
                       const sim::SimConfig& cfg, CollectStats* stats) {
  if (n_traj < 1 || traj_len < 1) {
    throw std::invalid_argument("collect_random: n_traj and traj_len must be >= 1");
  }
  std::vector<Trajectory> trajs(static_cast<size_t>(n_traj));
  std::vector<int64_t> resamples(static_cast<size_t>(n_traj), 0);

  nn::parallel_for(n_traj, [&](int64_t t0, int64_t t1) {
    for (int64_t ti = t0; ti < t1; ++ti) {
      nn::Rng rng(nn::Rng::mix(seed, static_cast<uint64_t>(ti)));
      auto rr = sim::reset(kind, rng.next_u64(), randomize, cfg, image_size);
      sim::EnvState state = rr.state;
      sim::RenderParams params = rr.params;
      sim::ImageObs obs = rr.obs;

      Trajectory traj;
      traj.params = params;
      auto push_obs = [&](const sim::ImageObs& o) {
        traj.images.insert(traj.images.end(), o.rgb.begin(), o.rgb.end());
      };
      auto push_state = [&](const sim::EnvState& s) {
        auto f = state_to_floats(s);
        traj.states.insert(traj.states.end(), f.begin(), f.end());
      };
      push_obs(obs);
      push_state(state);

      // Quantize sampled components to f32 so the stored action replays the
      // exact transition.
      auto qf = [](double v) { return static_cast<double>(static_cast<float>(v)); };

      for (int s = 0; s < traj_len; ++s) {
        sim::PickPlaceAction act;
        if (kind == sim::EnvKind::kPointmass) {
          act = sim::PickPlaceAction::make(kind, 0, 0, qf(rng.uniform(-1, 1)),
                                           qf(rng.uniform(-1, 1)));
        } else {
          sim::BinaryMask mask = sim::segment(obs, params);
          int area = mask.area();
          while (area == 0) {
            // Appearance made the object invisible; resample and re-render.
            params = sim::sample_render_params(rng, true);
            traj.params = params;
            obs = sim::render(state, params, image_size);
            mask = sim::segment(obs, params);
            area = mask.area();
            ++resamples[static_cast<size_t>(ti)];
          }
          int pick = rng.uniform_int(area);
          int px = 0, py = 0;
          for (int i = 0, seen = 0; i < mask.h * mask.w; ++i) {
            if (mask.fg[static_cast<size_t>(i)] && seen++ == pick) {
              px = i % mask.w;
              py = i / mask.w;
              break;
            }
          }
          double u = (px + 0.5) / mask.w;
          double v = (py + 0.5) / mask.h;
          double dz = kind == sim::EnvKind::kCloth ? qf(rng.uniform(-1, 1)) : 0.0;
          act = sim::PickPlaceAction::make(kind, u, v, qf(rng.uniform(-1, 1)),
                                           qf(rng.uniform(-1, 1)), dz);
        }
        state = sim::step(state, act, params, cfg);
        obs = sim::render(state, params, image_size);
        auto flat = act.flat(kind);
        traj.actions.insert(traj.actions.end(), flat.begin(), flat.end());
        push_obs(obs);
        push_state(state);
      }
      trajs[static_cast<size_t>(ti)] = std::move(traj);
    }
  });

  if (stats) {
    stats->param_resamples = 0;
    for (int64_t r : resamples) stats->param_resamples += r;
  }
  return Dataset(kind, image_size, traj_len, std::move(trajs));
}

BatchSampler::BatchSampler(const TransitionView& view, int batch_size,
                           nn::Rng rng)
    : view_(view), batch_(batch_size), count_(view.count()), rng_(rng) {
  if (batch_ < 2) {
    throw std::invalid_argument("BatchSampler: batch size must be >= 2");
  }
  if (count_ < batch_) {
    throw std::invalid_argument("BatchSampler: dataset has fewer transitions than one batch");
  }
  reshuffle();
}

void BatchSampler::reshuffle() {
  order_.resize(static_cast<size_t>(count_));
  for (int64_t i = 0; i < count_; ++i) order_[static_cast<size_t>(i)] = i;
  for (int64_t i = count_ - 1; i > 0; --i) {
    int64_t j = static_cast<int64_t>(rng_.next_u64() % static_cast<uint64_t>(i + 1));
    std::swap(order_[static_cast<size_t>(i)], order_[static_cast<size_t>(j)]);
  }
  cursor_ = 0;
}

Batch BatchSampler::next() {
  if (cursor_ + batch_ > count_) reshuffle();
  Batch b;
  b.b = batch_;
  b.h = b.w = view_.image_size();
  b.action_dim = view_.action_dim();
  const int64_t img_bytes = static_cast<int64_t>(b.h) * b.w * 3;
  b.obs_t.resize(static_cast<size_t>(batch_ * img_bytes));
  b.obs_tp1.resize(static_cast<size_t>(batch_ * img_bytes));
  b.actions.resize(static_cast<size_t>(batch_) * b.action_dim);
  b.provenance.resize(static_cast<size_t>(batch_));
  for (int i = 0; i < batch_; ++i) {
    int64_t idx = order_[static_cast<size_t>(cursor_ + i)];
    std::copy_n(view_.obs_t(idx), img_bytes, b.obs_t.data() + i * img_bytes);
    std::copy_n(view_.obs_tp1(idx), img_bytes, b.obs_tp1.data() + i * img_bytes);
    std::copy_n(view_.action(idx), b.action_dim,
                b.actions.data() + static_cast<int64_t>(i) * b.action_dim);
    b.provenance[static_cast<size_t>(i)] = view_.provenance(idx);
  }
  cursor_ += batch_;
  return b;
}

Batch sample_batch(const TransitionView& view, int batch_size, nn::Rng& rng) {
  BatchSampler sampler(view, batch_size, rng.split(rng.next_u64()));
  return sampler.next();
}

}  // namespace cfm::data
