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

#include "cfm/nn/param_store.hpp"

#include <cmath>

namespace cfm::nn {

template <typename T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg) {
  if (!store.grads_ready()) {
    throw std::logic_error("adam_step: gradients not populated");
  }
  store.advance_step();
  const double t = static_cast<double>(store.step());
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& e : store.entries()) {
    if (!e.grad.all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient for " + e.name);
    }
    const int64_t n = e.value.numel();
    T* p = e.value.ptr();
    T* gp = e.grad.ptr();
    T* mp = e.m.ptr();
    T* vp = e.v.ptr();
    for (int64_t i = 0; i < n; ++i) {
      const double g = static_cast<double>(gp[i]);
      const double m = cfg.beta1 * static_cast<double>(mp[i]) + (1.0 - cfg.beta1) * g;
      const double v = cfg.beta2 * static_cast<double>(vp[i]) + (1.0 - cfg.beta2) * g * g;
      mp[i] = static_cast<T>(m);
      vp[i] = static_cast<T>(v);
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      p[i] = static_cast<T>(static_cast<double>(p[i]) -
                            cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
    if (!e.value.all_finite()) {
      throw std::runtime_error("adam_step: non-finite parameter " + e.name);
    }
  }
  store.zero_grads();
}

template void adam_step<float>(ParamStore<float>&, const AdamConfig&);
template void adam_step<double>(ParamStore<double>&, const AdamConfig&);

}  // namespace cfm::nn
