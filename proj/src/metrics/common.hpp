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

#ifndef PMET_SRC_METRICS_COMMON_HPP_
#define PMET_SRC_METRICS_COMMON_HPP_

#include <vector>

#include "pmet/ad.hpp"
#include "pmet/metrics.hpp"
#include "pmet/tensor.hpp"

namespace pmet::metrics::internal {

using namespace pmet::ad;

// Per-metric builders on prepared inputs. Single-channel metrics receive one
// channel at a time via the per-channel-average policy.
Var mae_value(const Var& ref, const Var& dist);
Var ms_ssim_value(const Var& ref, const Var& dist, int scales);
Var gmsd_value(const Var& ref, const Var& dist);
Var nlpd_value(const Var& ref, const Var& dist);
Var cw_ssim_value(const Var& ref, const Var& dist);
Var vif_value(const Var& ref, const Var& dist);
Var fsim_value(const Var& ref, const Var& dist);  // chromatic term when RGB
Var vsi_value(const Var& ref, const Var& dist);
Var mad_value(const Var& ref, const Var& dist);
Var lpips_value(const Var& ref, const Var& dist, const backbone::BackboneWeights& bb);
Var dists_value(const Var& ref, const Var& dist, const backbone::BackboneWeights& bb);

// Windowed local statistics with mirror padding (same-size maps).
struct LocalStats {
  Var mu_x, mu_y, var_x, var_y, cov_xy;
};
LocalStats local_stats(const Var& x, const Var& y, const Tensor& window);

// Box low-pass by f then take every f-th sample (no-op for f == 1).
Var downsample_box(const Var& x, int f);

// Sample standard deviation (N-1 normalization).
Var sample_std(const Var& x);

// Piecewise-constant branch select on the sign of s (>= 0 picks a).
Var where_ge0(const Var& s, const Var& a, const Var& b);

// x**p through |x| with the real-part convention for negative bases:
// real((x)^p) = |x|^p * cos(pi*p) for x < 0.
Var signed_pow(const Var& x, double p);

inline Var scale255(const Var& x) { return muls(x, 255.0); }

}  // namespace pmet::metrics::internal

#endif  // PMET_SRC_METRICS_COMMON_HPP_
