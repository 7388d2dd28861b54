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

#include "cfm/model/model.hpp"

#include <cmath>

#include "cfm/data/dataset.hpp"

namespace cfm::model {

namespace {
constexpr double kLeakySlope = 0.01;
}

std::vector<int> decoder_channels(const EncoderSpec& enc) {
  int n_up = 0;
  for (int s : enc.strides) {
    if (s == 2) ++n_up;
  }
  std::vector<int> chans;
  chans.push_back(enc.filters.back());
  for (int i = 1; i < n_up; ++i) {
    chans.push_back(std::max(8, chans.back() / 2));
  }
  chans.push_back(3);
  return chans;
}

template <typename T>
void init_params(nn::ParamStore<T>& store, const ModelSpecs& specs, nn::Rng rng) {
  const auto& e = specs.enc;
  int c_in = e.in_channels;
  for (int i = 0; i < e.layer_count(); ++i) {
    int f = e.filters[static_cast<size_t>(i)];
    int k = e.kernels[static_cast<size_t>(i)];
    std::string base = "enc.conv" + std::to_string(i);
    store.add(base + ".w", nn::glorot_uniform<T>({f, c_in, k, k}, c_in * k * k,
                                                 f * k * k, rng));
    store.add(base + ".b", nn::Tensor<T>({f}));
    c_in = f;
  }
  store.add("enc.fc.w", nn::glorot_uniform<T>({e.flat_dim(), e.latent_dim},
                                              e.flat_dim(), e.latent_dim, rng));
  store.add("enc.fc.b", nn::Tensor<T>({e.latent_dim}));

  const int d = specs.latent_dim;
  const int adim = specs.action_dim;
  const auto& fm = specs.fm;
  // The forward model starts as the identity map on z (zero action effect):
  // InfoNCE constrains only relative distances, so a randomly initialized
  // head drifts far off the embedding manifold before training can anchor
  // it, which ruins planning distances at small data scales.
  switch (fm.variant) {
    case ForwardModelSpec::Variant::kLinear: {
      nn::Tensor<T> w({d + adim, d});
      for (int i = 0; i < d; ++i) w.data[static_cast<size_t>(i * d + i)] = T(1);
      store.add("fm.lin.w", std::move(w));
      store.add("fm.lin.b", nn::Tensor<T>({d}));
      break;
    }
    case ForwardModelSpec::Variant::kMlp:
    case ForwardModelSpec::Variant::kMlpLinear: {
      int in = fm.variant == ForwardModelSpec::Variant::kMlpLinear && fm.action_only
                   ? adim
                   : d + adim;
      int out = fm.variant == ForwardModelSpec::Variant::kMlp ? d : d * d + d;
      int prev = in;
      for (size_t i = 0; i < fm.hidden.size(); ++i) {
        int h = fm.hidden[i];
        std::string base = "fm.l" + std::to_string(i);
        store.add(base + ".w", nn::glorot_uniform<T>({prev, h}, prev, h, rng));
        store.add(base + ".b", nn::Tensor<T>({h}));
        prev = h;
      }
      if (fm.variant == ForwardModelSpec::Variant::kMlpLinear) {
        store.add("fm.out.w", nn::Tensor<T>({prev, out}));
        nn::Tensor<T> ob({out});
        for (int i = 0; i < d; ++i) ob.data[static_cast<size_t>(i * d + i)] = T(1);
        store.add("fm.out.b", std::move(ob));
      } else {
        store.add("fm.out.w", nn::glorot_uniform<T>({prev, out}, prev, out, rng));
        store.add("fm.out.b", nn::Tensor<T>({out}));
      }
      break;
    }
  }

  if (specs.has_decoder) {
    auto chans = decoder_channels(specs.enc);
    int sp = specs.enc.final_spatial();
    store.add("dec.fc.w",
              nn::glorot_uniform<T>({d, chans[0] * sp * sp}, d,
                                    chans[0] * sp * sp, rng));
    store.add("dec.fc.b", nn::Tensor<T>({chans[0] * sp * sp}));
    for (size_t i = 0; i + 1 < chans.size(); ++i) {
      std::string base = "dec.tconv" + std::to_string(i);
      int ci = chans[i], co = chans[i + 1];
      store.add(base + ".w",
                nn::glorot_uniform<T>({ci, co, 4, 4}, ci * 16, co * 16, rng));
      store.add(base + ".b", nn::Tensor<T>({co}));
    }
  }

  if (specs.has_inverse) {
    int prev = 2 * d;
    for (int i = 0; i < 2; ++i) {
      std::string base = "inv.l" + std::to_string(i);
      store.add(base + ".w", nn::glorot_uniform<T>({prev, 32}, prev, 32, rng));
      store.add(base + ".b", nn::Tensor<T>({32}));
      prev = 32;
    }
    store.add("inv.out.w", nn::glorot_uniform<T>({prev, adim}, prev, adim, rng));
    store.add("inv.out.b", nn::Tensor<T>({adim}));
  }
}

Checkpoint init_checkpoint(sim::EnvKind env, int image_size, int latent_dim,
                           const ForwardModelSpec& fm,
                           const std::string& objective,
                           nn::Similarity similarity, bool include_positive,
                           uint64_t seed) {
  Checkpoint ck;
  ck.specs.env = env;
  ck.specs.image_size = image_size;
  ck.specs.action_dim = sim::action_dims(env);
  ck.specs.latent_dim = latent_dim;
  ck.specs.enc = EncoderSpec::preset(image_size, latent_dim);
  ck.specs.fm = fm;
  ck.specs.has_decoder = objective == "autoencoder";
  ck.specs.has_inverse = objective == "joint";
  ck.objective = objective;
  ck.similarity = similarity;
  ck.include_positive = include_positive;
  init_params(ck.params, ck.specs, nn::Rng(nn::Rng::mix(seed, 0xC0DE)));
  return ck;
}

template <typename T>
int build_encoder(nn::Graph<T>& g, nn::GraphBinding<T>& bind,
                  const EncoderSpec& spec, int images) {
  // Copy: pushing nodes below reallocates the graph's node storage.
  const std::vector<int> s = g.shape(images);
  if (s.size() != 4 || s[1] != spec.in_channels || s[2] != spec.image_size ||
      s[3] != spec.image_size) {
    throw std::invalid_argument("encoder: observation shape " +
                                nn::shape_str(s) + " does not match spec");
  }
  int x = images;
  for (int i = 0; i < spec.layer_count(); ++i) {
    std::string base = "enc.conv" + std::to_string(i);
    x = g.conv2d(x, bind.param(base + ".w"), spec.strides[static_cast<size_t>(i)],
                 spec.pads[static_cast<size_t>(i)]);
    x = g.bias_channels(x, bind.param(base + ".b"));
    x = g.leaky_relu(x, static_cast<T>(kLeakySlope));
  }
  x = g.reshape(x, {s[0], spec.flat_dim()});
  return g.dense(x, bind.param("enc.fc.w"), bind.param("enc.fc.b"));
}

template <typename T>
int build_forward_model(nn::Graph<T>& g, nn::GraphBinding<T>& bind,
                        const ForwardModelSpec& spec, int z, int a,
                        int latent_dim) {
  switch (spec.variant) {
    case ForwardModelSpec::Variant::kLinear: {
      int in = g.concat_cols(z, a);
      return g.dense(in, bind.param("fm.lin.w"), bind.param("fm.lin.b"));
    }
    case ForwardModelSpec::Variant::kMlp: {
      int h = g.concat_cols(z, a);
      for (size_t i = 0; i < spec.hidden.size(); ++i) {
        std::string base = "fm.l" + std::to_string(i);
        h = g.dense(h, bind.param(base + ".w"), bind.param(base + ".b"));
        h = g.leaky_relu(h, static_cast<T>(kLeakySlope));
      }
      return g.dense(h, bind.param("fm.out.w"), bind.param("fm.out.b"));
    }
    case ForwardModelSpec::Variant::kMlpLinear: {
      int h = spec.action_only ? a : g.concat_cols(z, a);
      for (size_t i = 0; i < spec.hidden.size(); ++i) {
        std::string base = "fm.l" + std::to_string(i);
        h = g.dense(h, bind.param(base + ".w"), bind.param(base + ".b"));
        h = g.leaky_relu(h, static_cast<T>(kLeakySlope));
      }
      int p = g.dense(h, bind.param("fm.out.w"), bind.param("fm.out.b"));
      (void)latent_dim;
      return g.apply_linear_map(p, z);
    }
  }
  throw std::logic_error("unknown forward model variant");
}

template <typename T>
int build_decoder(nn::Graph<T>& g, nn::GraphBinding<T>& bind,
                  const EncoderSpec& enc, int z) {
  auto chans = decoder_channels(enc);
  int sp = enc.final_spatial();
  int x = g.dense(z, bind.param("dec.fc.w"), bind.param("dec.fc.b"));
  x = g.leaky_relu(x, static_cast<T>(kLeakySlope));
  x = g.reshape(x, {g.shape(z)[0], chans[0], sp, sp});
  for (size_t i = 0; i + 1 < chans.size(); ++i) {
    std::string base = "dec.tconv" + std::to_string(i);
    x = g.conv2d_transpose(x, bind.param(base + ".w"), 2, 1);
    x = g.bias_channels(x, bind.param(base + ".b"));
    if (i + 2 < chans.size()) x = g.leaky_relu(x, static_cast<T>(kLeakySlope));
  }
  return x;
}

template <typename T>
int build_inverse_model(nn::Graph<T>& g, nn::GraphBinding<T>& bind, int z_t,
                        int z_tp1, int action_dim) {
  int h = g.concat_cols(z_t, z_tp1);
  for (int i = 0; i < 2; ++i) {
    std::string base = "inv.l" + std::to_string(i);
    h = g.dense(h, bind.param(base + ".w"), bind.param(base + ".b"));
    h = g.leaky_relu(h, static_cast<T>(kLeakySlope));
  }
  (void)action_dim;
  return g.dense(h, bind.param("inv.out.w"), bind.param("inv.out.b"));
}

nn::Tensor<float> encode_batch(const Checkpoint& ckpt, const uint8_t* blob,
                               int b) {
  const int s = ckpt.specs.image_size;
  nn::Graph<float> g;
  nn::GraphBinding<float> bind(g, ckpt.params);
  int imgs = g.leaf(data::images_to_tensor<float>(blob, b, s, s));
  int z = build_encoder(g, bind, ckpt.specs.enc, imgs);
  g.check_finite(z, "encode output");
  return g.val(z);
}

std::vector<float> encode(const Checkpoint& ckpt, const sim::ImageObs& obs) {
  if (obs.h != ckpt.specs.image_size || obs.w != ckpt.specs.image_size) {
    throw std::invalid_argument("encode: observation is " +
                                std::to_string(obs.w) + "x" +
                                std::to_string(obs.h) + ", checkpoint expects " +
                                std::to_string(ckpt.specs.image_size));
  }
  auto t = encode_batch(ckpt, obs.rgb.data(), 1);
  return std::vector<float>(t.data.begin(), t.data.end());
}

nn::Tensor<float> forward_latent_batch(const Checkpoint& ckpt,
                                       const std::vector<float>& z,
                                       const std::vector<float>& actions_flat,
                                       int n) {
  const int d = ckpt.specs.latent_dim;
  const int adim = ckpt.specs.action_dim;
  if (static_cast<int>(z.size()) != d) {
    throw std::invalid_argument("forward_latent: latent dim mismatch");
  }
  if (static_cast<int>(actions_flat.size()) != n * adim) {
    throw std::invalid_argument("forward_latent: action dim mismatch");
  }
  nn::Graph<float> g;
  nn::GraphBinding<float> bind(g, ckpt.params);
  nn::Tensor<float> zt({n, d});
  for (int i = 0; i < n; ++i) {
    std::copy(z.begin(), z.end(), zt.data.begin() + static_cast<int64_t>(i) * d);
  }
  nn::Tensor<float> at({n, adim}, actions_flat);
  int out = build_forward_model(g, bind, ckpt.specs.fm, g.leaf(std::move(zt)),
                                g.leaf(std::move(at)), d);
  g.check_finite(out, "forward_latent output");
  return g.val(out);
}

std::vector<float> forward_latent(const Checkpoint& ckpt,
                                  const std::vector<float>& z,
                                  const sim::PickPlaceAction& action) {
  auto flat = action.flat(ckpt.specs.env);
  std::vector<float> af(flat.begin(), flat.end());
  auto t = forward_latent_batch(ckpt, z, af, 1);
  return std::vector<float>(t.data.begin(), t.data.end());
}

double similarity_e2(const std::vector<float>& z1, const std::vector<float>& z2) {
  if (z1.size() != z2.size()) {
    throw std::invalid_argument("similarity: dimension mismatch");
  }
  double d2 = 0.0;
  for (size_t i = 0; i < z1.size(); ++i) {
    double d = static_cast<double>(z1[i]) - z2[i];
    d2 += d * d;
  }
  return std::exp(-d2);
}

double similarity_logbilinear(const std::vector<float>& z1,
                              const std::vector<float>& z2) {
  if (z1.size() != z2.size()) {
    throw std::invalid_argument("similarity: dimension mismatch");
  }
  double dot = 0.0;
  for (size_t i = 0; i < z1.size(); ++i) {
    dot += static_cast<double>(z1[i]) * z2[i];
  }
  return std::exp(dot);
}

template void init_params<float>(nn::ParamStore<float>&, const ModelSpecs&, nn::Rng);
template void init_params<double>(nn::ParamStore<double>&, const ModelSpecs&, nn::Rng);
template int build_encoder<float>(nn::Graph<float>&, nn::GraphBinding<float>&, const EncoderSpec&, int);
template int build_encoder<double>(nn::Graph<double>&, nn::GraphBinding<double>&, const EncoderSpec&, int);
template int build_forward_model<float>(nn::Graph<float>&, nn::GraphBinding<float>&, const ForwardModelSpec&, int, int, int);
template int build_forward_model<double>(nn::Graph<double>&, nn::GraphBinding<double>&, const ForwardModelSpec&, int, int, int);
template int build_decoder<float>(nn::Graph<float>&, nn::GraphBinding<float>&, const EncoderSpec&, int);
template int build_decoder<double>(nn::Graph<double>&, nn::GraphBinding<double>&, const EncoderSpec&, int);
template int build_inverse_model<float>(nn::Graph<float>&, nn::GraphBinding<float>&, int, int, int);
template int build_inverse_model<double>(nn::Graph<double>&, nn::GraphBinding<double>&, int, int, int);

}  // namespace cfm::model
