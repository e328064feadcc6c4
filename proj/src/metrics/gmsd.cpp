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

// Gradient magnitude similarity deviation: Prewitt gradients on a 2x
// box-downsampled [0,255] image, similarity map with T=170, std pooling.
Var gmsd_value(const Var& ref, const Var& dist) {
  constexpr double kT = 170.0;
  Var x = downsample_box(scale255(ref), 2);
  Var y = downsample_box(scale255(dist), 2);
  Var gx = signal::gradient_magnitude(x, signal::GradientOperator::kPrewitt, 1e-12);
  Var gy = signal::gradient_magnitude(y, signal::GradientOperator::kPrewitt, 1e-12);
  Var gms = div(adds(muls(mul(gx, gy), 2.0), kT),
                adds(add(square(gx), square(gy)), kT));
  return sample_std(gms);
}

}  // namespace pmet::metrics::internal
