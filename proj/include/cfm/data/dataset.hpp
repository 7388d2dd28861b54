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

#ifndef CFM_DATA_DATASET_HPP_
#define CFM_DATA_DATASET_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cfm/nn/rng.hpp"
#include "cfm/nn/tensor.hpp"
#include "cfm/sim/env.hpp"

namespace cfm::data {

// File-format failures carry a kind so callers can distinguish a bad magic
// from a short read.
class IoError : public std::runtime_error {
 public:
  enum class Kind { kBadMagic, kBadVersion, kTruncated, kBadValue };
  IoError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

// One random-policy rollout. Images, actions and ground-truth states are
// stored exactly as the CFMD file stores them (f32 states), so
// load(save(d)) == d byte for byte.
struct Trajectory {
  sim::RenderParams params;
  std::vector<uint8_t> images;  // (len+1) * h*w*3
  std::vector<float> actions;   // len * action_dim
  std::vector<float> states;    // (len+1) * n_particles * 6 (pos, vel)
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(sim::EnvKind kind, int image_size, int traj_len,
          std::vector<Trajectory> trajs);

  sim::EnvKind kind() const { return kind_; }
  int image_size() const { return image_size_; }
  int traj_len() const { return traj_len_; }
  int n_traj() const { return static_cast<int>(trajs_.size()); }
  int action_dim() const { return sim::action_dims(kind_); }
  int64_t transition_count() const {
    return static_cast<int64_t>(trajs_.size()) * traj_len_;
  }
  const std::vector<Trajectory>& trajectories() const { return trajs_; }

  // Ground-truth state for evaluation/analysis; never exposed through
  // TransitionView, which is all the trainer sees.
  sim::EnvState state_at(int traj, int step) const;

  std::vector<uint8_t> to_bytes() const;
  static Dataset from_bytes(const std::vector<uint8_t>& bytes);
  void save(const std::string& path) const;
  static Dataset load(const std::string& path);

 private:
  sim::EnvKind kind_ = sim::EnvKind::kPointmass;
  int image_size_ = 32;
  int traj_len_ = 0;
  std::vector<Trajectory> trajs_;
};

// The training-facing surface: (o_t, a_t, o_{t+1}) tuples only.
class TransitionView {
 public:
  explicit TransitionView(const Dataset& d) : d_(&d) {}

  sim::EnvKind kind() const { return d_->kind(); }
  int image_size() const { return d_->image_size(); }
  int action_dim() const { return d_->action_dim(); }
  int64_t count() const { return d_->transition_count(); }

  const uint8_t* obs_t(int64_t i) const;
  const uint8_t* obs_tp1(int64_t i) const;
  const float* action(int64_t i) const;
  std::pair<int, int> provenance(int64_t i) const {
    return {static_cast<int>(i / d_->traj_len()),
            static_cast<int>(i % d_->traj_len())};
  }

 private:
  const Dataset* d_;
};

struct CollectStats {
  int64_t param_resamples = 0;
};

// Random-policy collection: per trajectory, reset then traj_len actions with
// the pick sampled uniformly over the segmentation foreground and the delta
// uniform in [-1,1]^dims. Trajectories use independent RNG streams derived
// from the master seed, so the result is byte-identical for any thread count.
Dataset collect_random(sim::EnvKind kind, int n_traj, int traj_len,
                       uint64_t seed, bool randomize, int image_size = 32,
                       const sim::SimConfig& cfg = {},
                       CollectStats* stats = nullptr);

struct Batch {
  int b = 0, h = 0, w = 0, action_dim = 0;
  std::vector<uint8_t> obs_t;    // b * h*w*3
  std::vector<uint8_t> obs_tp1;  // b * h*w*3
  std::vector<float> actions;    // b * action_dim
  std::vector<std::pair<int, int>> provenance;
};

// Uniform sampling without replacement within an epoch shuffle; remainder
// transitions smaller than a batch are dropped.
class BatchSampler {
 public:
  BatchSampler(const TransitionView& view, int batch_size, nn::Rng rng);
  Batch next();
  int64_t batches_per_epoch() const { return count_ / batch_; }

 private:
  void reshuffle();
  TransitionView view_;
  int batch_;
  int64_t count_;
  nn::Rng rng_;
  std::vector<int64_t> order_;
  int64_t cursor_ = 0;
};

Batch sample_batch(const TransitionView& view, int batch_size, nn::Rng& rng);

// 8-bit pixel <-> [-1,1] float. 0 maps to -1, 255 to +1.
inline float normalize_pixel(uint8_t v) {
  return static_cast<float>(v) / 127.5f - 1.0f;
}
inline uint8_t denormalize_pixel(float f) {
  float v = (f + 1.0f) * 127.5f;
  v = std::min(255.0f, std::max(0.0f, v));
  return static_cast<uint8_t>(std::lround(v));
}

// HWC u8 image blob -> [B,3,H,W] tensor in [-1,1].
template <typename T>
nn::Tensor<T> images_to_tensor(const uint8_t* blob, int b, int h, int w) {
  nn::Tensor<T> t({b, 3, h, w});
  T* out = t.ptr();
  for (int i = 0; i < b; ++i) {
    const uint8_t* img = blob + static_cast<int64_t>(i) * h * w * 3;
    for (int c = 0; c < 3; ++c) {
      T* plane = out + (static_cast<int64_t>(i) * 3 + c) * h * w;
      for (int p = 0; p < h * w; ++p) {
        plane[p] = static_cast<T>(normalize_pixel(img[p * 3 + c]));
      }
    }
  }
  return t;
}

}  // namespace cfm::data

#endif  // CFM_DATA_DATASET_HPP_
