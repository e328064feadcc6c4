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

#ifndef PMET_BACKBONE_HPP_
#define PMET_BACKBONE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "pmet/ad.hpp"
#include "pmet/tensor.hpp"

namespace pmet::backbone {

// Convolutional feature extractor over a conv / relu / pool vocabulary.
// Weight files decide the architecture; the engine stays generic.
//
// File format (PMBW version 1, all little-endian):
//   magic "PMBW1" (5 bytes), format version u16, layer count u32.
//   Per layer: kind tag u8 (1=conv, 2=relu, 3=maxpool, 4=avgpool),
//     shape rank u8, dims u32 each, then f32 payload row-major.
//     Conv layers use rank 4 with dims [out_c, in_c, kh, kw]; the payload is
//     prod(dims) kernel taps followed by out_c bias values (stride 1, zero
//     padding kh/2 x kw/2). Pool layers use rank 0 (2x2 window, stride 2).
//   Trailing section, each length-prefixed with a u32 count:
//     exported stage indices (u32 each), normalization constants (f32: input
//     channel means then stds), per-channel calibration weights (f32, stage
//     order), structure weights alpha (f32), texture weights beta (f32; both
//     cover the raw input stage followed by exported stages).
//   CRC32 (u32) of all preceding bytes.

struct Layer {
  enum class Kind : uint8_t { kConv = 1, kRelu = 2, kMaxPool = 3, kAvgPool = 4 };
  Kind kind = Kind::kRelu;
  int out_c = 0, in_c = 0, kh = 0, kw = 0;  // conv only
  std::vector<float> weights;
  std::vector<float> bias;
};

struct BackboneWeights {
  std::vector<Layer> layers;
  std::vector<uint32_t> stage_taps;  // indices of layers whose outputs export
  std::vector<double> norm_mean, norm_std;
  std::vector<float> lpips_weights;              // sum of stage channels
  std::vector<float> dists_alpha, dists_beta;    // input channels + stage channels

  int input_channels() const;
  std::vector<int> stage_channels() const;
  void validate() const;  // shape chain, finiteness, stage coverage
};

BackboneWeights load_weights(const std::string& path);
void save_weights(const BackboneWeights& w, const std::string& path);

// Feature stages for an image in [0,1]; normalization constants are applied
// before layer 0. Gradients flow to the image only; weights are fixed.
std::vector<ad::Var> forward_stages(const BackboneWeights& w, const ad::Var& img);
std::vector<Tensor> forward(const BackboneWeights& w, const Tensor& img);

// Gradient of sum_s <stages[s], cotangents[s]> with respect to the input.
Tensor backward(const BackboneWeights& w, const Tensor& img,
                const std::vector<Tensor>& stage_cotangents);

}  // namespace pmet::backbone

#endif  // PMET_BACKBONE_HPP_
