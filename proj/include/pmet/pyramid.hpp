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

#ifndef PMET_PYRAMID_HPP_
#define PMET_PYRAMID_HPP_

#include <vector>

#include "pmet/ad.hpp"
#include "pmet/tensor.hpp"

namespace pmet::signal {

enum class PyramidKind { kGaussian, kLaplacian, kSteerableComplex, kNormalizedLaplacian };

// Real-valued pyramid. Gaussian: levels[0] is the input, each next level is
// blur + decimate by 2 (5-tap binomial, mirror boundary). Laplacian: n-1
// difference bands followed by the low-pass residual; collapse reconstructs
// the input exactly up to floating-point error.
struct Pyramid {
  PyramidKind kind = PyramidKind::kGaussian;
  std::vector<Tensor> levels;
};

std::vector<ad::Var> gaussian_pyramid(const ad::Var& img, int n_levels);
Pyramid gaussian_pyramid(const Tensor& img, int n_levels);

std::vector<ad::Var> laplacian_pyramid(const ad::Var& img, int n_levels);
Pyramid laplacian_pyramid(const Tensor& img, int n_levels);
ad::Var collapse_laplacian(const std::vector<ad::Var>& levels);
Tensor collapse_laplacian(const Pyramid& pyr);

// Complex steerable pyramid, built in the frequency domain with raised-cosine
// radial windows and cos^(K-1) angular windows over the analytic half-plane.
// Scale s is stored at resolution (H,W)/2^s; requires grayscale input with
// dimensions divisible by 2^(scales-1).
struct SteerablePyramidV {
  int scales = 0;
  int orientations = 0;
  std::vector<std::vector<ad::CVar>> bands;  // [scale][orientation]
  ad::Var highpass;                          // real residual, full resolution
  ad::Var lowpass;                           // real residual, coarsest grid
};

struct SteerablePyramid {
  int scales = 0;
  int orientations = 0;
  std::vector<std::vector<std::pair<Tensor, Tensor>>> bands;  // (re, im)
  Tensor highpass;
  Tensor lowpass;
  // Total coefficient energy per scale (sum over orientations of |b|^2).
  std::vector<double> band_energy() const;
};

SteerablePyramidV steerable_complex_pyramid(const ad::Var& img, int scales,
                                            int orientations);
SteerablePyramid steerable_complex_pyramid(const Tensor& img, int scales,
                                           int orientations);

}  // namespace pmet::signal

#endif  // PMET_PYRAMID_HPP_
