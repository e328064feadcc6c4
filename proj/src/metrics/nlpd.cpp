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

namespace pmet::metrics::internal {

namespace {

// Divisive-normalization floors per pyramid stage (finest to residual).
const double kSigma[6] = {0.0248, 0.0185, 0.0179, 0.0191, 0.0220, 0.2782};
constexpr int kStages = 6;

}  // namespace

// Normalized Laplacian pyramid distance: band-pass luminance subtraction via
// a 6-stage Laplacian pyramid, local gain control by a blurred magnitude
// estimate, then the mean across stages of per-stage RMS differences.
Var nlpd_value(const Var& ref, const Var& dist) {
  const std::vector<double> p5 = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
  auto normalize = [&p5](const Var& img) {
    auto bands = signal::laplacian_pyramid(img, kStages);
    std::vector<Var> z;
    for (int k = 0; k < kStages; ++k) {
      Var denom_local =
          sep_filter_same(abs_(bands[k]), p5, p5, Boundary::kMirror);
      z.push_back(div(bands[k], adds(denom_local, kSigma[k])));
    }
    return z;
  };
  auto zr = normalize(ref);
  auto zd = normalize(dist);
  Var acc;
  for (int k = 0; k < kStages; ++k) {
    Var rms = sqrt_(adds(mean_all(square(sub(zr[k], zd[k]))), 1e-16));
    acc = k == 0 ? rms : add(acc, rms);
  }
  return muls(acc, 1.0 / kStages);
}

}  // namespace pmet::metrics::internal
