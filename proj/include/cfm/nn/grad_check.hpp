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

#ifndef CFM_NN_GRAD_CHECK_HPP_
#define CFM_NN_GRAD_CHECK_HPP_

#include <functional>
#include <string>

#include "cfm/nn/param_store.hpp"
#include "cfm/nn/rng.hpp"

namespace cfm::nn {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  int64_t coords_checked = 0;
  int64_t coords_skipped_nonsmooth = 0;
};

// f must evaluate the scalar loss deterministically AND leave analytic
// gradients in the store. Compares those gradients against central
// differences (f(p+h)-f(p-h))/2h on every coordinate, or on a seeded random
// subset of max_coords_per_tensor per tensor when a tensor is larger.
//
// Per-coordinate error is |ga-gf| / max(1, |ga|, |gf|); coordinates where
// both gradients are below 1e-12 count as 0. A coordinate whose second
// difference |f(p+h)-2f(p)+f(p-h)|/2h exceeds half the tolerance is skipped
// and counted: a leaky-relu kink inside [p-h, p+h] makes the central
// difference meaningless there.
//
// value_fn, when provided, must compute the same loss without touching
// gradients; the difference probes use it to avoid redundant backward passes.
GradCheckReport grad_check(const std::function<double(ParamStore<double>&)>& f,
                           ParamStore<double>& params, double h,
                           int max_coords_per_tensor, Rng& rng,
                           double tolerance = 1e-4,
                           const std::function<double(ParamStore<double>&)>&
                               value_fn = {});

}  // namespace cfm::nn

#endif  // CFM_NN_GRAD_CHECK_HPP_
