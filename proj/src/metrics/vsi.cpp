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

// Pooling constants.
constexpr double kC1 = 1.27;   // saliency similarity
constexpr double kC2 = 386.0;  // gradient similarity
constexpr double kC3 = 130.0;  // chrominance similarity
constexpr double kAlpha = 0.40;
constexpr double kLambda = 0.02;

// Saliency detector constants (frequency prior, location prior, color prior).
constexpr double kSigmaF = 1.34;
constexpr double kOmega0 = 0.021;
constexpr double kSigmaD = 145.0;
constexpr double kSigmaC = 0.001;
constexpr int kSaliencySize = 256;

Var piecewise_srgb_linearize(const Var& v01) {
  // v <= 0.04045 ? v/12.92 : ((v+0.055)/1.055)^2.4
  Var low = muls(v01, 1.0 / 12.92);
  Var high = pow_(clamp_min(muls(adds(v01, 0.055), 1.0 / 1.055), 1e-8), 2.4);
  return where_ge0(adds(neg(v01), 0.04045), low, high);
}

Var lab_f(const Var& t) {
  // t > (6/29)^3 ? t^(1/3) : t/(3 (6/29)^2) + 4/29
  constexpr double d = 6.0 / 29.0;
  Var cube_root = pow_(clamp_min(t, 1e-12), 1.0 / 3.0);
  Var linear = adds(muls(t, 1.0 / (3 * d * d)), 4.0 / 29.0);
  return where_ge0(adds(neg(t), d * d * d), linear, cube_root);
}

struct Lab {
  Var l, a, b;
};

// sRGB (0..255) to CIE Lab under D65.
Lab to_lab(const Var& rgb255) {
  Var r = piecewise_srgb_linearize(muls(slice_channel(rgb255, 0), 1.0 / 255.0));
  Var g = piecewise_srgb_linearize(muls(slice_channel(rgb255, 1), 1.0 / 255.0));
  Var b = piecewise_srgb_linearize(muls(slice_channel(rgb255, 2), 1.0 / 255.0));
  Var x = add(add(muls(r, 0.4124564), muls(g, 0.3575761)), muls(b, 0.1804375));
  Var y = add(add(muls(r, 0.2126729), muls(g, 0.7151522)), muls(b, 0.0721750));
  Var z = add(add(muls(r, 0.0193339), muls(g, 0.1191920)), muls(b, 0.9503041));
  Var fx = lab_f(muls(x, 1.0 / 0.95047));
  Var fy = lab_f(y);
  Var fz = lab_f(muls(z, 1.0 / 1.08883));
  Lab out;
  out.l = adds(muls(fy, 116.0), -16.0);
  out.a = muls(sub(fx, fy), 500.0);
  out.b = muls(sub(fy, fz), 200.0);
  return out;
}

Var band_pass(const Var& x, const Tensor& mask) {
  return ifft2c(cmul_mask(fft2(x), mask, Tensor(mask.height(), mask.width(), 1))).re;
}

Var normalize01(const Var& x) {
  Var lo = min_all(x);
  Var range = adds(sub(max_all(x), lo), 1e-12);
  return div(sub(x, lo), range);
}

// Saliency from a band-pass frequency prior on Lab channels, a centered
// Gaussian location prior, and a warm-color prior.
Var saliency_map(const Var& rgb255, int out_h, int out_w) {
  Var small = ad::resize_bilinear(rgb255, kSaliencySize, kSaliencySize);
  Lab lab = to_lab(small);

  Tensor lg(kSaliencySize, kSaliencySize, 1);
  for (int y = 0; y < kSaliencySize; ++y) {
    int fy = y <= (kSaliencySize - 1) / 2 ? y : y - kSaliencySize;
    double vy = static_cast<double>(fy) / kSaliencySize;
    for (int x = 0; x < kSaliencySize; ++x) {
      int fx = x <= (kSaliencySize - 1) / 2 ? x : x - kSaliencySize;
      double vx = static_cast<double>(fx) / kSaliencySize;
      double r = std::max(std::sqrt(vx * vx + vy * vy), 1e-12);
      double lr = std::log(r / kOmega0);
      lg.at(0, y, x) = std::exp(-(lr * lr) / (2 * std::log(kSigmaF) * std::log(kSigmaF)));
    }
  }
  lg.at(0, 0, 0) = 0.0;

  Var sf = sqrt_(adds(add(add(square(band_pass(lab.l, lg)), square(band_pass(lab.a, lg))),
                          square(band_pass(lab.b, lg))),
                      1e-24));

  Tensor sd(kSaliencySize, kSaliencySize, 1);
  double cy = (kSaliencySize - 1) / 2.0, cx = (kSaliencySize - 1) / 2.0;
  for (int y = 0; y < kSaliencySize; ++y)
    for (int x = 0; x < kSaliencySize; ++x)
      sd.at(0, y, x) =
          std::exp(-((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (kSigmaD * kSigmaD));

  Var an = normalize01(lab.a);
  Var bn = normalize01(lab.b);
  Var sc = sub(Var::scalar(1.0),
               exp_(muls(add(square(an), square(bn)), -1.0 / (kSigmaC * kSigmaC))));

  Var s = mul(real_mul_mask(sf, sd), sc);
  Var resized = ad::resize_bilinear(s, out_h, out_w);
  return normalize01(resized);
}

struct Lmn {
  Var l, m, n;
};

Lmn to_lmn(const Var& rgb255) {
  Var r = slice_channel(rgb255, 0), g = slice_channel(rgb255, 1),
      b = slice_channel(rgb255, 2);
  Lmn out;
  out.l = add(add(muls(r, 0.06), muls(g, 0.63)), muls(b, 0.27));
  out.m = add(add(muls(r, 0.30), muls(g, 0.04)), muls(b, -0.35));
  out.n = add(add(muls(r, 0.34), muls(g, -0.60)), muls(b, 0.17));
  return out;
}

Var sim_map(const Var& a, const Var& b, double t) {
  return div(adds(muls(mul(a, b), 2.0), t), adds(add(square(a), square(b)), t));
}

}  // namespace

// Saliency-weighted similarity: visual saliency enters both as a feature and
// as the pooling weight, complemented by gradient magnitude on luminance and
// chrominance similarity with a small exponent.
Var vsi_value(const Var& ref, const Var& dist) {
  Var r255 = scale255(ref), d255 = scale255(dist);
  bool color = ref.channels() == 3;
  if (!color) {
    // Grayscale fallback: replicate to drive the color machinery.
    r255 = concat_channels({r255, r255, r255});
    d255 = concat_channels({d255, d255, d255});
  }

  int f = std::max(1, static_cast<int>(std::lround(
                          std::min(ref.height(), ref.width()) / 256.0)));

  Var vs1 = downsample_box(saliency_map(r255, ref.height(), ref.width()), f);
  Var vs2 = downsample_box(saliency_map(d255, ref.height(), ref.width()), f);

  Lmn c1 = to_lmn(r255), c2 = to_lmn(d255);
  Var l1 = downsample_box(c1.l, f), l2 = downsample_box(c2.l, f);
  Var g1 = signal::gradient_magnitude(l1, signal::GradientOperator::kScharr, 1e-12);
  Var g2 = signal::gradient_magnitude(l2, signal::GradientOperator::kScharr, 1e-12);

  Var s_vs = sim_map(vs1, vs2, kC1);
  Var s_g = sim_map(g1, g2, kC2);
  Var s = mul(s_vs, pow_(clamp_min(s_g, 1e-12), kAlpha));
  if (color) {
    Var m1 = downsample_box(c1.m, f), m2 = downsample_box(c2.m, f);
    Var n1 = downsample_box(c1.n, f), n2 = downsample_box(c2.n, f);
    Var s_c = mul(sim_map(m1, m2, kC3), sim_map(n1, n2, kC3));
    s = mul(s, signed_pow(s_c, kLambda));
  }
  Var vsm = maximum(vs1, vs2);
  return div(sum_all(mul(s, vsm)), adds(sum_all(vsm), 1e-12));
}

}  // namespace pmet::metrics::internal
