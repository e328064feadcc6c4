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

#include <array>
#include <cmath>

#include "common.hpp"
#include "pmet/phasecong.hpp"

namespace pmet::metrics::internal {

namespace {

constexpr int kBlock = 16;
constexpr int kStride = 4;
constexpr double kPixPerDeg = 32.0;  // display visual resolution
constexpr double kLumGain = 0.02874;
constexpr double kGamma = 2.2;
constexpr double kContrastThresh = 0.005;  // detection floor contrast
constexpr double kMaskingSlope = 0.7;      // threshold-vs-mask log-log slope
constexpr double kBeta1 = 0.467;           // blending weight parameters
constexpr double kBeta2 = 0.130;

// Contrast sensitivity as a function of cycles/degree, flattened below its
// peak so low frequencies are not suppressed.
Tensor csf_mask(int h, int w) {
  auto csf = [](double f) {
    double lf = 0.114 * f;
    return 2.6 * (0.0192 + lf) * std::exp(-std::pow(lf, 1.1));
  };
  // Peak of the unflattened curve, located once by scan.
  double fpeak = 0, best = 0;
  for (double f = 0.1; f < 30; f += 0.01)
    if (csf(f) > best) {
      best = csf(f);
      fpeak = f;
    }
  Tensor m(h, w, 1);
  for (int y = 0; y < h; ++y) {
    int fy = y <= (h - 1) / 2 ? y : y - h;
    double vy = static_cast<double>(fy) / h;
    for (int x = 0; x < w; ++x) {
      int fx = x <= (w - 1) / 2 ? x : x - w;
      double vx = static_cast<double>(fx) / w;
      double f_cpd = std::sqrt(vx * vx + vy * vy) * kPixPerDeg;
      m.at(0, y, x) = f_cpd < fpeak ? best : csf(f_cpd);
    }
  }
  return m;
}

Var box16(const Var& x) { return box_mean_stride(x, kBlock, kStride); }

Var block_sigma(const Var& x) {
  Var mu = box16(x);
  Var var = clamp_min(sub(box16(square(x)), square(mu)), 0.0);
  return sqrt_(adds(var, 1e-12));
}

// Detection stage: luminance and contrast masking of the CSF-filtered error.
Var detection_index(const Var& ref255, const Var& dist255) {
  auto lum = [](const Var& x) {
    return pow_(adds(muls(x, kLumGain), 1e-8), kGamma);
  };
  Var lr = lum(ref255), ld = lum(dist255);
  Tensor csf = csf_mask(lr.height(), lr.width());
  Tensor zero(lr.height(), lr.width(), 1);
  Var fr = ifft2c(cmul_mask(fft2(lr), csf, zero)).re;
  Var fd = ifft2c(cmul_mask(fft2(ld), csf, zero)).re;
  Var err = sub(fr, fd);

  Var mu_ref = box16(fr);
  Var c_ref = div(block_sigma(fr), adds(abs_(mu_ref), 1e-2));
  Var c_err = div(block_sigma(err), adds(abs_(mu_ref), 1e-2));
  // Masked visibility threshold: the floor contrast when the block is flat,
  // rising sublinearly (log-log slope < 1) with the reference contrast.
  double log_ct = std::log(kContrastThresh);
  Var log_thr = clamp_min(adds(muls(log_(adds(c_ref, 1e-6)), kMaskingSlope),
                               (1.0 - kMaskingSlope) * log_ct),
                          log_ct);
  Var visibility = relu_(sub(log_(adds(c_err, 1e-6)), log_thr));
  Var lmse = box16(square(err));
  return muls(sqrt_(adds(mean_all(mul(visibility, lmse)), 1e-20)), 200.0);
}

// Appearance stage: differences of local log-Gabor magnitude statistics.
Var appearance_index(const Var& ref255, const Var& dist255) {
  signal::LogGaborBank bank;
  bank.scales = 5;
  bank.orientations = 4;
  bank.min_wavelength = 3.0;
  bank.mult = 3.0;
  bank.sigma_on_f = 0.55;
  bank.d_theta_on_sigma = 1.5;
  const double w[5] = {0.5, 0.75, 1.0, 5.0, 6.0};
  const double wsum = 13.25;

  auto stats = [](const Var& mag) {
    Var m1 = box16(mag);
    Var m2 = box16(square(mag));
    Var m3 = box16(mul(square(mag), mag));
    Var m4 = box16(square(square(mag)));
    Var c2 = clamp_min(sub(m2, square(m1)), 0.0);
    Var sigma = sqrt_(adds(c2, 1e-12));
    Var c3 = add(sub(m3, muls(mul(m1, m2), 3.0)), muls(mul(m1, square(m1)), 2.0));
    Var c4 = sub(add(sub(m4, muls(mul(m1, m3), 4.0)),
                     muls(mul(square(m1), m2), 6.0)),
                 muls(square(square(m1)), 3.0));
    Var skew = div(c3, adds(mul(sigma, c2), 1e-12));
    Var kurt = div(c4, adds(square(c2), 1e-12));
    return std::array<Var, 3>{sigma, skew, kurt};
  };

  auto rr = signal::log_gabor_responses(ref255, bank);
  auto rd = signal::log_gabor_responses(dist255, bank);
  Var eta;
  bool first = true;
  for (int s = 0; s < bank.scales; ++s)
    for (int o = 0; o < bank.orientations; ++o) {
      auto sr = stats(cabs(rr[s][o], 1e-24));
      auto sd = stats(cabs(rd[s][o], 1e-24));
      Var d = add(add(abs_(sub(sr[0], sd[0])), muls(abs_(sub(sr[1], sd[1])), 2.0)),
                  abs_(sub(sr[2], sd[2])));
      Var weighted = muls(d, w[s] / wsum);
      eta = first ? weighted : add(eta, weighted);
      first = false;
    }
  return muls(sqrt_(adds(mean_all(square(eta)), 1e-20)), 0.25);
}

}  // namespace

// Most-apparent-distortion style index: a detection stage for near-threshold
// distortions and an appearance stage for supra-threshold ones, blended by a
// weighted geometric mean whose weight follows the detection level.
Var mad_value(const Var& ref, const Var& dist) {
  Var d_detect = detection_index(scale255(ref), scale255(dist));
  Var d_appear = appearance_index(scale255(ref), scale255(dist));
  Var dd = adds(d_detect, 1e-30);
  Var da = adds(d_appear, 1e-30);
  Var alpha = div(Var::scalar(1.0),
                  adds(muls(pow_(dd, kBeta2), kBeta1), 1.0));
  Var log_val = add(mul(alpha, log_(dd)),
                    mul(sub(Var::scalar(1.0), alpha), log_(da)));
  return exp_(log_val);
}

}  // namespace pmet::metrics::internal
