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
#include "pmet/pyramid.hpp"
#include "pmet/signal.hpp"

namespace pmet::metrics::internal {

// Complex-wavelet structural similarity on the coarsest oriented scale of a
// 4-scale, 8-orientation complex steerable pyramid. Per orientation:
//   (2 |sum w x y*| + K) / (sum w (|x|^2 + |y|^2) + K)
// with a 7x7 Gaussian window; magnitude and relative-phase consistency both
// enter through the windowed complex product.
Var cw_ssim_value(const Var& ref, const Var& dist) {
  constexpr int kScales = 4;
  constexpr int kOrients = 8;
  constexpr double kK = 1e-8;
  const Tensor window = signal::gaussian_kernel(7, 7.0 / 6.0).taps;

  auto pr = signal::steerable_complex_pyramid(ref, kScales, kOrients);
  auto pd = signal::steerable_complex_pyramid(dist, kScales, kOrients);

  Var acc;
  for (int o = 0; o < kOrients; ++o) {
    const CVar& x = pr.bands[kScales - 1][o];
    const CVar& y = pd.bands[kScales - 1][o];
    CVar prod = cmul(x, conj(y));
    Var cr = filter2_same(prod.re, window, Boundary::kMirror);
    Var ci = filter2_same(prod.im, window, Boundary::kMirror);
    Var corr = cabs({cr, ci}, 1e-24);
    Var energy = filter2_same(
        add(add(square(x.re), square(x.im)), add(square(y.re), square(y.im))),
        window, Boundary::kMirror);
    Var cw_map = div(adds(muls(corr, 2.0), kK), adds(energy, kK));
    Var m = mean_all(cw_map);
    acc = o == 0 ? m : add(acc, m);
  }
  return muls(acc, 1.0 / kOrients);
}

}  // namespace pmet::metrics::internal
