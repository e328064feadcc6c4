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

#include "common.hpp"
#include "pmet/signal.hpp"

namespace pmet::metrics::internal {

namespace {

constexpr double kC1 = 0.01 * 0.01;  // (K1 L)^2 on the [0,1] range
constexpr double kC2 = 0.03 * 0.03;
const double kScaleWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

}  // namespace

// Multi-scale structural similarity: contrast/structure terms at every scale,
// luminance only at the coarsest, exponent-weighted product. Local statistics
// use an 11x11 Gaussian (sigma 1.5) with mirror padding, which keeps the
// deepest scale well defined for 128-pixel inputs.
Var ms_ssim_value(const Var& ref, const Var& dist, int scales) {
  if (scales < 1 || scales > 5)
    throw std::invalid_argument("ms-ssim: scales must be in 1..5");
  const Tensor window = signal::gaussian_kernel(11, 1.5).taps;

  // Reduced-scale variants renormalize the published weights to sum 1.
  double wsum = 0;
  for (int s = 0; s < scales; ++s) wsum += kScaleWeights[s];

  Var x = ref, y = dist, value;
  for (int s = 0; s < scales; ++s) {
    LocalStats st = local_stats(x, y, window);
    Var cs = div(adds(muls(st.cov_xy, 2.0), kC2),
                 adds(add(st.var_x, st.var_y), kC2));
    cs = relu_(cs);  // guards the fractional exponent against negative lobes
    double w = kScaleWeights[s] / wsum;
    Var term;
    if (s + 1 < scales) {
      term = pow_(adds(mean_all(cs), 1e-12), w);
    } else {
      Var lum = div(adds(muls(mul(st.mu_x, st.mu_y), 2.0), kC1),
                    adds(add(square(st.mu_x), square(st.mu_y)), kC1));
      term = pow_(adds(mean_all(mul(lum, cs)), 1e-12), w);
      // The luminance-bearing coarsest mean can only be negative if lum*cs
      // dips below zero everywhere; the relu above keeps cs non-negative and
      // lum >= -1, so the epsilon floor suffices.
    }
    value = s == 0 ? term : mul(value, term);
    if (s + 1 < scales) {
      x = downsample_box(x, 2);
      y = downsample_box(y, 2);
    }
  }
  return value;
}

}  // namespace pmet::metrics::internal
