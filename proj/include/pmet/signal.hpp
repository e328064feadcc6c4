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

#ifndef PMET_SIGNAL_HPP_
#define PMET_SIGNAL_HPP_

#include <vector>

#include "pmet/ad.hpp"
#include "pmet/tensor.hpp"

namespace pmet::signal {

using ad::Boundary;

// 2-D correlation kernel with an explicit anchor.
struct Kernel {
  Tensor taps;  // kh x kw, single channel
  int anchor_y = 0;
  int anchor_x = 0;

  // Anchor at floor((k-1)/2); symmetric filters should use odd dimensions.
  static Kernel centered(Tensor taps);
};

Kernel gaussian_kernel(int size, double sigma);  // normalized to sum 1

// Same-size correlation of img with k (linear, deterministic).
ad::Var convolve(const ad::Var& img, const Kernel& k, Boundary b);
Tensor convolve(const Tensor& img, const Kernel& k, Boundary b);

// Luminance with BT.601 weights (0.299, 0.587, 0.114); identity on 1-channel.
ad::Var to_luminance(const ad::Var& img);
Tensor to_luminance(const Tensor& img);

enum class ResampleMethod { kNearest, kBicubic };

// Rescales by `factor` (output size = round(size * factor)). Bicubic uses the
// Keys kernel (a = -0.5) with kernel widening when minifying; out-of-range
// taps replicate the edge and weights renormalize to 1.
ad::Var resample(const ad::Var& img, double factor, ResampleMethod m);
Tensor resample(const Tensor& img, double factor, ResampleMethod m);

enum class GradientOperator { kPrewitt, kScharr, kSobel };

// Non-negative gradient magnitude map, mirror boundary. `eps` stabilizes the
// square root away from zero for differentiation.
ad::Var gradient_magnitude(const ad::Var& img, GradientOperator op, double eps);
Tensor gradient_map(const Tensor& img, GradientOperator op);

// Softmax-weighted quantization to a finite center set:
//   q(z) = sum_j softmax_j(-s (z - c_j)^2) c_j.
ad::Var soft_quantize(const ad::Var& z, const std::vector<double>& centers,
                      double scale);
Tensor soft_quantize(const Tensor& z, const std::vector<double>& centers,
                     double scale);

// 3x3 stencils, normalized: prewitt/3, sobel/8, scharr/16 (x direction;
// y is the transpose).
Tensor gradient_stencil_x(GradientOperator op);

double psnr(const Tensor& a, const Tensor& b);  // dB, peak 1.0

}  // namespace pmet::signal

#endif  // PMET_SIGNAL_HPP_
