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

#include "cfm/model/gradcheck_suite.hpp"

#include <functional>

#include "cfm/data/dataset.hpp"
#include "cfm/model/losses.hpp"
#include "cfm/nn/grad_check.hpp"

namespace cfm::model {

namespace {

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

using BuildFn = std::function<int(nn::Graph<double>&, nn::GraphBinding<double>&)>;
using InitFn = std::function<void(nn::ParamStore<double>&, nn::Rng&)>;

}  // namespace

std::vector<GradCheckItem> run_gradcheck_suite(int seeds, double h, int coords,
                                               double tol, uint64_t seed) {
  std::vector<GradCheckItem> items;

  auto layer_item = [&](const std::string& name, const InitFn& init,
                        const BuildFn& build) {
    GradCheckItem item;
    item.name = name;
    for (int s = 0; s < seeds; ++s) {
      nn::Rng prng(nn::Rng::mix(seed, fnv1a64(name) + static_cast<uint64_t>(s)));
      nn::ParamStore<double> params;
      init(params, prng);
      auto fn = [&build](nn::ParamStore<double>& p, bool with_grads) {
        nn::Graph<double> g;
        nn::GraphBinding<double> bind(g, p);
        int loss = build(g, bind);
        double v = g.val(loss).data[0];
        if (with_grads) {
          g.backward(loss);
          p.zero_grads();
          bind.pull_grads();
        }
        return v;
      };
      auto f = [&fn](nn::ParamStore<double>& p) { return fn(p, true); };
      auto fv = [&fn](nn::ParamStore<double>& p) { return fn(p, false); };
      nn::Rng crng(nn::Rng::mix(seed, 7000 + static_cast<uint64_t>(s)));
      auto rep = nn::grad_check(f, params, h, coords, crng, tol, fv);
      item.max_rel_err = std::max(item.max_rel_err, rep.max_rel_err);
      item.coords += rep.coords_checked;
      item.skipped += rep.coords_skipped_nonsmooth;
    }
    items.push_back(item);
  };

  layer_item("dense",
             [](nn::ParamStore<double>& p, nn::Rng& r) {
               p.add("x", nn::glorot_uniform<double>({3, 5}, 5, 4, r));
               p.add("w", nn::glorot_uniform<double>({5, 4}, 5, 4, r));
               p.add("b", nn::glorot_uniform<double>({4}, 5, 4, r));
             },
             [](nn::Graph<double>& g, nn::GraphBinding<double>& bind) {
               return g.mean(g.square(
                   g.dense(bind.param("x"), bind.param("w"), bind.param("b"))));
             });
  layer_item("conv2d_s1",
             [](nn::ParamStore<double>& p, nn::Rng& r) {
               p.add("x", nn::glorot_uniform<double>({2, 3, 6, 6}, 9, 9, r));
               p.add("k", nn::glorot_uniform<double>({4, 3, 3, 3}, 27, 36, r));
             },
             [](nn::Graph<double>& g, nn::GraphBinding<double>& bind) {
               return g.mean(g.square(g.conv2d(bind.param("x"), bind.param("k"), 1, 1)));
             });
  layer_item("conv2d_s2",
             [](nn::ParamStore<double>& p, nn::Rng& r) {
               p.add("x", nn::glorot_uniform<double>({2, 3, 8, 8}, 9, 9, r));
               p.add("k", nn::glorot_uniform<double>({4, 3, 4, 4}, 48, 64, r));
             },
             [](nn::Graph<double>& g, nn::GraphBinding<double>& bind) {
               return g.mean(g.square(g.conv2d(bind.param("x"), bind.param("k"), 2, 1)));
             });
  layer_item("conv2d_transpose",
             [](nn::ParamStore<double>& p, nn::Rng& r) {
               p.add("x", nn::glorot_uniform<double>({2, 4, 4, 4}, 8, 8, r));
               p.add("k", nn::glorot_uniform<double>({4, 3, 4, 4}, 64, 48, r));
             },
             [](nn::Graph<double>& g, nn::GraphBinding<double>& bind) {
               return g.mean(g.square(
                   g.conv2d_transpose(bind.param("x"), bind.param("k"), 2, 1)));
             });
  layer_item("bias_leaky_relu",
             [](nn::ParamStore<double>& p, nn::Rng& r) {
               p.add("x", nn::glorot_uniform<double>({2, 3, 5, 5}, 5, 5, r));
               p.add("b", nn::glorot_uniform<double>({3}, 3, 3, r));
             },
             [](nn::Graph<double>& g, nn::GraphBinding<double>& bind) {
               return g.mean(g.square(g.leaky_relu(
                   g.bias_channels(bind.param("x"), bind.param("b")), 0.01)));
             });
  layer_item("apply_linear_map",
             [](nn::ParamStore<double>& p, nn::Rng& r) {
               p.add("p", nn::glorot_uniform<double>({3, 20}, 20, 20, r));
               p.add("z", nn::glorot_uniform<double>({3, 4}, 4, 4, r));
             },
             [](nn::Graph<double>& g, nn::GraphBinding<double>& bind) {
               return g.mean(g.square(
                   g.apply_linear_map(bind.param("p"), bind.param("z"))));
             });
  layer_item("infonce_e2",
             [](nn::ParamStore<double>& p, nn::Rng& r) {
               p.add("zhat", nn::glorot_uniform<double>({5, 4}, 2, 2, r));
               p.add("znext", nn::glorot_uniform<double>({5, 4}, 2, 2, r));
             },
             [](nn::Graph<double>& g, nn::GraphBinding<double>& bind) {
               return g.infonce(bind.param("zhat"), bind.param("znext"),
                                nn::Similarity::kE2, true);
             });
  layer_item("infonce_logbilinear",
             [](nn::ParamStore<double>& p, nn::Rng& r) {
               p.add("zhat", nn::glorot_uniform<double>({5, 4}, 2, 2, r));
               p.add("znext", nn::glorot_uniform<double>({5, 4}, 2, 2, r));
             },
             [](nn::Graph<double>& g, nn::GraphBinding<double>& bind) {
               return g.infonce(bind.param("zhat"), bind.param("znext"),
                                nn::Similarity::kLogBilinear, false);
             });

  auto dataset = data::collect_random(sim::EnvKind::kPointmass, 6, 8,
                                      nn::Rng::mix(seed, 99), false, 16);
  data::TransitionView view(dataset);
  for (const std::string objective : {"cfm", "autoencoder", "joint"}) {
    GradCheckItem item;
    item.name = "loss_" + objective;
    for (int s = 0; s < seeds; ++s) {
      ModelSpecs specs;
      specs.env = sim::EnvKind::kPointmass;
      specs.image_size = 16;
      specs.action_dim = 2;
      specs.latent_dim = 4;
      specs.enc = EncoderSpec::preset(16, 4);
      specs.fm = ForwardModelSpec{};
      specs.has_decoder = objective == "autoencoder";
      specs.has_inverse = objective == "joint";
      nn::ParamStore<double> params;
      init_params(params, specs, nn::Rng(nn::Rng::mix(seed, 300 + static_cast<uint64_t>(s))));
      nn::Rng brng(nn::Rng::mix(seed, 400 + static_cast<uint64_t>(s)));
      auto batch = data::sample_batch(view, 4, brng);
      auto fn = [&specs, &batch, &objective](nn::ParamStore<double>& p,
                                             bool with_grads) {
        nn::Graph<double> g;
        nn::GraphBinding<double> bind(g, p);
        int loss = build_objective_loss(g, bind, specs, batch, objective,
                                        LossOptions{});
        double v = g.val(loss).data[0];
        if (with_grads) {
          g.backward(loss);
          p.zero_grads();
          bind.pull_grads();
        }
        return v;
      };
      auto f = [&fn](nn::ParamStore<double>& p) { return fn(p, true); };
      auto fv = [&fn](nn::ParamStore<double>& p) { return fn(p, false); };
      nn::Rng crng(nn::Rng::mix(seed, 500 + static_cast<uint64_t>(s)));
      auto rep = nn::grad_check(f, params, h, coords, crng, tol, fv);
      item.max_rel_err = std::max(item.max_rel_err, rep.max_rel_err);
      item.coords += rep.coords_checked;
      item.skipped += rep.coords_skipped_nonsmooth;
    }
    items.push_back(item);
  }
  return items;
}

}  // namespace cfm::model
