// Copyright 2026 The Pmet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PMET_GRAD_HPP_
#define PMET_GRAD_HPP_

#include <cstdint>
#include <string>

#include "pmet/metrics.hpp"
#include "pmet/tensor.hpp"

namespace pmet::grad {

struct GradientReport {
  std::string metric_id;
  double max_rel_error = 0.0;
  int checked_coordinates = 0;
  uint64_t probe_seed = 0;
};

// d loss / d dist via reverse accumulation through the metric graph.
Tensor loss_gradient(const std::string& metric_id, const Tensor& ref,
                     const Tensor& dist, const metrics::EvalContext& ctx = {});

// Compares loss_gradient against central differences at n_probes seeded
// random coordinates. Relative error per probe uses
// |a - f| / max(|a|, |f|, floor) with floor = 1e-8 + 1e-4 * max |f|.
GradientReport finite_diff_check(const std::string& metric_id, const Tensor& ref,
                                 const Tensor& dist, int n_probes, uint64_t seed,
                                 double step = 1e-4,
                                 const metrics::EvalContext& ctx = {});

}  // namespace pmet::grad

#endif  // PMET_GRAD_HPP_
