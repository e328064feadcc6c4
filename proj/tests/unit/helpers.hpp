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

#ifndef PMET_TESTS_UNIT_HELPERS_HPP_
#define PMET_TESTS_UNIT_HELPERS_HPP_

#include <algorithm>
#include <functional>
#include <vector>

#include "pmet/ad.hpp"
#include "pmet/rng.hpp"
#include "pmet/tensor.hpp"

namespace pmet::testutil {

inline Tensor random_tensor(Rng& rng, int h, int w, int c, double lo = 0.0,
                            double hi = 1.0) {
  Tensor t(h, w, c);
  for (size_t i = 0; i < t.size(); ++i)
    t.data()[i] = lo + (hi - lo) * rng.next_double();
  return t;
}

// Smooth random image: low-frequency cosine mixture plus mild noise, useful
// where tests need natural-ish structure.
inline Tensor smooth_tensor(Rng& rng, int h, int w, int c) {
  Tensor t(h, w, c);
  for (int ch = 0; ch < c; ++ch) {
    double fy1 = 1 + rng.next_below(4), fx1 = 1 + rng.next_below(4);
    double ph1 = rng.next_double() * 6.28, ph2 = rng.next_double() * 6.28;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = 0.5 + 0.2 * std::cos(2 * M_PI * fy1 * y / h + ph1) *
                             std::cos(2 * M_PI * fx1 * x / w + ph2) +
                   0.05 * (rng.next_double() - 0.5);
        t.at(ch, y, x) = std::clamp(v, 0.0, 1.0);
      }
  }
  return t;
}

// Central-difference check of a scalar-valued graph builder at random
// coordinates. Returns the max relative error.
inline double max_rel_fd_error(
    const std::function<ad::Var(const ad::Var&)>& build, const Tensor& x0,
    int n_probes, double step, uint64_t seed) {
  ad::Var leaf = ad::Var::leaf(x0);
  ad::Var y = build(leaf);
  ad::backward(y);
  Tensor g = leaf.grad();

  Rng rng(seed);
  std::vector<size_t> picks;
  for (int p = 0; p < n_probes; ++p) picks.push_back(rng.next_below(x0.size()));

  std::vector<double> fd(picks.size());
  double fd_max = 0;
  for (size_t k = 0; k < picks.size(); ++k) {
    Tensor xp = x0, xm = x0;
    xp.data()[picks[k]] += step;
    xm.data()[picks[k]] -= step;
    double fp = build(ad::Var::constant(xp)).item();
    double fm = build(ad::Var::constant(xm)).item();
    fd[k] = (fp - fm) / (2 * step);
    fd_max = std::max(fd_max, std::abs(fd[k]));
  }
  double floor = 1e-8 + 1e-4 * fd_max;
  double max_err = 0;
  for (size_t k = 0; k < picks.size(); ++k) {
    double a = g.data()[picks[k]];
    double denom = std::max({std::abs(a), std::abs(fd[k]), floor});
    max_err = std::max(max_err, std::abs(a - fd[k]) / denom);
  }
  return max_err;
}

}  // namespace pmet::testutil

#endif  // PMET_TESTS_UNIT_HELPERS_HPP_
