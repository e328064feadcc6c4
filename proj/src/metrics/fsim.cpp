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
#include "pmet/phasecong.hpp"
#include "pmet/signal.hpp"

namespace pmet::metrics::internal {

namespace {

constexpr double kT1 = 0.85;   // phase-congruency similarity
constexpr double kT2 = 160.0;  // gradient similarity, [0,255] scale
constexpr double kT3 = 200.0;  // I chrominance
constexpr double kT4 = 200.0;  // Q chrominance
constexpr double kLambda = 0.03;

struct Yiq {
  Var y, i, q;
};

Yiq to_yiq(const Var& img) {
  if (img.channels() == 1) return {img, Var(), Var()};
  Var r = slice_channel(img, 0), g = slice_channel(img, 1), b = slice_channel(img, 2);
  Yiq out;
  out.y = add(add(muls(r, 0.299), muls(g, 0.587)), muls(b, 0.114));
  out.i = add(add(muls(r, 0.596), muls(g, -0.274)), muls(b, -0.322));
  out.q = add(add(muls(r, 0.211), muls(g, -0.523)), muls(b, 0.312));
  return out;
}

Var sim_map(const Var& a, const Var& b, double t) {
  return div(adds(muls(mul(a, b), 2.0), t), adds(add(square(a), square(b)), t));
}

}  // namespace

// Feature similarity: phase congruency as the primary feature and Scharr
// gradient magnitude as the complement, pooled with max(PC1, PC2) weights.
// RGB inputs add the YIQ chromatic similarity raised to a small exponent.
Var fsim_value(const Var& ref, const Var& dist) {
  bool color = ref.channels() == 3;
  Yiq a = to_yiq(scale255(ref));
  Yiq b = to_yiq(scale255(dist));

  int f = std::max(1, static_cast<int>(std::lround(
                          std::min(ref.height(), ref.width()) / 256.0)));
  Var y1 = downsample_box(a.y, f), y2 = downsample_box(b.y, f);

  signal::LogGaborBank bank = signal::log_gabor_bank(4, 4);
  signal::PhaseCongParams pcp;
  Var pc1 = signal::phase_congruency(y1, bank, pcp);
  Var pc2 = signal::phase_congruency(y2, bank, pcp);

  Var g1 = signal::gradient_magnitude(y1, signal::GradientOperator::kScharr, 1e-12);
  Var g2 = signal::gradient_magnitude(y2, signal::GradientOperator::kScharr, 1e-12);

  Var s_pc = sim_map(pc1, pc2, kT1);
  Var s_g = sim_map(g1, g2, kT2);
  Var s_l = mul(s_pc, s_g);

  if (color) {
    Var i1 = downsample_box(a.i, f), i2 = downsample_box(b.i, f);
    Var q1 = downsample_box(a.q, f), q2 = downsample_box(b.q, f);
    Var s_c = mul(sim_map(i1, i2, kT3), sim_map(q1, q2, kT4));
    s_l = mul(s_l, signed_pow(s_c, kLambda));
  }

  Var pcm = maximum(pc1, pc2);
  return div(sum_all(mul(s_l, pcm)), adds(sum_all(pcm), 1e-12));
}

}  // namespace pmet::metrics::internal
