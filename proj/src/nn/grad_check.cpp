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

#include "cfm/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cfm::nn {

GradCheckReport grad_check(const std::function<double(ParamStore<double>&)>& f,
                           ParamStore<double>& params, double h,
                           int max_coords_per_tensor, Rng& rng,
                           double tolerance,
                           const std::function<double(ParamStore<double>&)>& value_fn) {
  const auto& fv = value_fn ? value_fn : f;
  const double f0 = f(params);
  if (!params.grads_ready()) {
    throw std::logic_error("grad_check: f did not populate gradients");
  }
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.entries().size());
  for (const auto& e : params.entries()) analytic.push_back(e.grad);

  GradCheckReport rep;
  for (size_t ei = 0; ei < params.entries().size(); ++ei) {
    auto& entry = params.entries()[ei];
    const int64_t n = entry.value.numel();
    std::vector<int64_t> coords;
    if (n <= max_coords_per_tensor) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      coords.reserve(static_cast<size_t>(max_coords_per_tensor));
      for (int i = 0; i < max_coords_per_tensor; ++i) {
        coords.push_back(rng.next_u64() % static_cast<uint64_t>(n));
      }
    }
    for (int64_t c : coords) {
      const double orig = entry.value.data[static_cast<size_t>(c)];
      entry.value.data[static_cast<size_t>(c)] = orig + h;
      const double fp = fv(params);
      entry.value.data[static_cast<size_t>(c)] = orig - h;
      const double fm = fv(params);
      entry.value.data[static_cast<size_t>(c)] = orig;
      const double gf = (fp - fm) / (2.0 * h);
      const double ga = analytic[ei].data[static_cast<size_t>(c)];
      const double scale = std::max({1.0, std::abs(ga), std::abs(gf)});
      if (std::abs(fp - 2.0 * f0 + fm) / (2.0 * h) > 0.5 * tolerance * scale) {
        ++rep.coords_skipped_nonsmooth;
        continue;
      }
      double err = 0.0;
      if (std::abs(ga) >= 1e-12 || std::abs(gf) >= 1e-12) {
        err = std::abs(ga - gf) / scale;
      }
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst_param = entry.name;
        rep.worst_index = c;
      }
      ++rep.coords_checked;
    }
  }
  // Leave the store in a clean state: re-evaluate at the original point.
  f(params);
  return rep;
}

}  // namespace cfm::nn
