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

#include "pmet/grad.hpp"

#include <algorithm>
#include <vector>

#include "pmet/rng.hpp"

namespace pmet::grad {

Tensor loss_gradient(const std::string& metric_id, const Tensor& ref,
                     const Tensor& dist, const metrics::EvalContext& ctx) {
  metrics::validate_pair(metric_id, ref, dist);
  ad::Var leaf = ad::Var::leaf(dist);
  ad::Var loss = metrics::loss_graph(metric_id, ad::Var::constant(ref), leaf, ctx);
  ad::backward(loss);
  return leaf.grad();
}

GradientReport finite_diff_check(const std::string& metric_id, const Tensor& ref,
                                 const Tensor& dist, int n_probes, uint64_t seed,
                                 double step, const metrics::EvalContext& ctx) {
  if (n_probes < 1) throw std::invalid_argument("finite_diff_check: need probes >= 1");
  if (!(step > 0)) throw std::invalid_argument("finite_diff_check: step must be positive");
  metrics::validate_pair(metric_id, ref, dist);

  Tensor analytic = loss_gradient(metric_id, ref, dist, ctx);

  Rng rng(seed);
  std::vector<size_t> picks;
  picks.reserve(n_probes);
  for (int p = 0; p < n_probes; ++p) picks.push_back(rng.next_below(dist.size()));

  auto loss_at = [&](const Tensor& d) {
    return metrics::loss_graph(metric_id, ad::Var::constant(ref),
                               ad::Var::constant(d), ctx)
        .item();
  };

  std::vector<double> fd(picks.size());
  double fd_max = 0;
  for (size_t k = 0; k < picks.size(); ++k) {
    Tensor dp = dist, dm = dist;
    dp.data()[picks[k]] += step;
    dm.data()[picks[k]] -= step;
    fd[k] = (loss_at(dp) - loss_at(dm)) / (2 * step);
    fd_max = std::max(fd_max, std::abs(fd[k]));
  }

  GradientReport rep;
  rep.metric_id = metric_id;
  rep.checked_coordinates = n_probes;
  rep.probe_seed = seed;
  double floor = 1e-8 + 1e-4 * fd_max;
  for (size_t k = 0; k < picks.size(); ++k) {
    double a = analytic.data()[picks[k]];
    double denom = std::max({std::abs(a), std::abs(fd[k]), floor});
    rep.max_rel_error = std::max(rep.max_rel_error, std::abs(a - fd[k]) / denom);
  }
  return rep;
}

}  // namespace pmet::grad
