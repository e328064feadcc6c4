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
#include "pmet/backbone.hpp"

namespace pmet::metrics::internal {

namespace {

Var unit_normalize(const Var& f) {
  Var norm = sqrt_(adds(sum_channels(square(f)), 1e-10));
  return div(f, broadcast_channel(norm, f.channels()));
}

Var maybe_rgb(const Var& x) {
  return x.channels() == 1 ? concat_channels({x, x, x}) : x;
}

}  // namespace

// Euclidean distance between unit-normalized deep feature stacks, with
// per-channel calibration weights and spatial averaging per stage.
Var lpips_value(const Var& ref, const Var& dist,
                const backbone::BackboneWeights& bb) {
  if (bb.lpips_weights.empty())
    throw std::invalid_argument("lpips: weight file has no calibration vector");
  auto fr = backbone::forward_stages(bb, ref);
  auto fd = backbone::forward_stages(bb, dist);
  size_t off = 0;
  Var total;
  for (size_t s = 0; s < fr.size(); ++s) {
    Var d2 = square(sub(unit_normalize(fr[s]), unit_normalize(fd[s])));
    int c = d2.channels();
    std::vector<double> wc(c), zero(c, 0.0);
    for (int i = 0; i < c; ++i) wc[i] = bb.lpips_weights[off + i];
    off += c;
    Var weighted = sum_channels(scale_shift_channels(d2, wc, zero));
    Var term = mean_all(weighted);
    total = s == 0 ? term : add(total, term);
  }
  return total;
}

// Structure and texture similarity over feature stages (raw input included),
// with learned non-negative stage/channel weights; returned as a distance.
Var dists_value(const Var& ref, const Var& dist,
                const backbone::BackboneWeights& bb) {
  if (bb.dists_alpha.empty())
    throw std::invalid_argument("dists: weight file has no structure/texture weights");
  constexpr double kC = 1e-6;
  Var r3 = maybe_rgb(ref), d3 = maybe_rgb(dist);
  std::vector<Var> fr{r3}, fd{d3};
  for (auto& v : backbone::forward_stages(bb, r3)) fr.push_back(v);
  for (auto& v : backbone::forward_stages(bb, d3)) fd.push_back(v);

  double wsum = 0;
  for (float v : bb.dists_alpha) wsum += v;
  for (float v : bb.dists_beta) wsum += v;
  if (!(wsum > 0)) throw std::invalid_argument("dists: weights must not be all zero");

  size_t off = 0;
  Var quality;
  for (size_t s = 0; s < fr.size(); ++s) {
    Var mu_x = spatial_mean(fr[s]);
    Var mu_y = spatial_mean(fd[s]);
    Var var_x = sub(spatial_mean(square(fr[s])), square(mu_x));
    Var var_y = sub(spatial_mean(square(fd[s])), square(mu_y));
    Var cov = sub(spatial_mean(mul(fr[s], fd[s])), mul(mu_x, mu_y));
    Var lum = div(adds(muls(mul(mu_x, mu_y), 2.0), kC),
                  adds(add(square(mu_x), square(mu_y)), kC));
    Var str = div(adds(muls(cov, 2.0), kC), adds(add(var_x, var_y), kC));
    int c = fr[s].channels();
    std::vector<double> wa(c), wb(c), zero(c, 0.0);
    for (int i = 0; i < c; ++i) {
      wa[i] = bb.dists_alpha[off + i] / wsum;
      wb[i] = bb.dists_beta[off + i] / wsum;
    }
    off += c;
    Var term = add(sum_all(scale_shift_channels(lum, wa, zero)),
                   sum_all(scale_shift_channels(str, wb, zero)));
    quality = s == 0 ? term : add(quality, term);
  }
  return sub(Var::scalar(1.0), quality);
}

}  // namespace pmet::metrics::internal
