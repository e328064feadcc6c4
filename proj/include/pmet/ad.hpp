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

#ifndef PMET_AD_HPP_
#define PMET_AD_HPP_

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "pmet/tensor.hpp"

namespace pmet::ad {

// Reverse-mode accumulation over a fixed operator vocabulary. Graphs are
// built eagerly: every op computes its value immediately and records a
// closure that scatters the incoming cotangent to its parents. The tape is
// private to the expression being built, so independent evaluations are safe
// from concurrent threads.

enum class Boundary { kMirror, kReplicate, kZero };

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first contribution during backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backfn;

  void accumulate(const Tensor& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> n) : n_(std::move(n)) {}

  static Var leaf(Tensor v);      // differentiable input
  static Var constant(Tensor v);  // no gradient tracking
  static Var scalar(double v) { return constant(Tensor::scalar(v)); }

  bool defined() const { return n_ != nullptr; }
  const Tensor& val() const { return n_->value; }
  int height() const { return n_->value.height(); }
  int width() const { return n_->value.width(); }
  int channels() const { return n_->value.channels(); }
  double item() const { return n_->value.item(); }
  bool requires_grad() const { return n_->requires_grad; }
  std::shared_ptr<Node> node() const { return n_; }

  // Gradient captured by the last backward() pass; zeros if untouched.
  Tensor grad() const;

 private:
  std::shared_ptr<Node> n_;
};

// Runs reverse accumulation from the given roots with the given cotangent
// seeds. Seeds must match root value shapes.
void backward(const std::vector<std::pair<Var, Tensor>>& seeds);

// Convenience: scalar root seeded with 1.
void backward(const Var& scalar_root);

// ---- pointwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var adds(const Var& a, double s);
Var muls(const Var& a, double s);
Var neg(const Var& a);
Var maximum(const Var& a, const Var& b);  // ties select the left branch
Var minimum(const Var& a, const Var& b);
Var clamp_min(const Var& a, double s);
Var sqrt_(const Var& a);
Var square(const Var& a);
Var pow_(const Var& a, double p);
Var exp_(const Var& a);
Var log_(const Var& a);
Var log2_(const Var& a);
Var abs_(const Var& a);
Var tanh_(const Var& a);
Var relu_(const Var& a);

// ---- reductions ----
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var median_all(const Var& a);
Var max_all(const Var& a);  // gradient to the first maximizer
Var min_all(const Var& a);

// ---- channel reductions / broadcasts ----
Var sum_channels(const Var& a);              // HxWxC -> HxWx1
Var broadcast_channel(const Var& a, int c);  // HxWx1 -> HxWxC
Var spatial_mean(const Var& a);              // HxWxC -> 1x1xC

// ---- shape ----
Var pad(const Var& a, int top, int bottom, int left, int right, Boundary b);
Var crop(const Var& a, int y0, int x0, int h, int w);
Var slice_channel(const Var& a, int c);
Var concat_channels(const std::vector<Var>& parts);
Var stopgrad(const Var& a);

// ---- filtering / sampling ----
// Depthwise correlation (no kernel flip); kernel is a 1-channel tensor.
Var filter2_valid(const Var& a, const Tensor& k);
Var filter2_same(const Var& a, const Tensor& k, Boundary b);
// Separable same-size filter: horizontal taps kx then vertical taps ky.
Var sep_filter_same(const Var& a, const std::vector<double>& kx,
                    const std::vector<double>& ky, Boundary b);
// Cross-channel affine convolution, zero padding `pad`, square stride.
// Weights laid out [out_c][in_c][kh][kw]; bias per out channel.
Var conv_layer(const Var& a, const std::vector<float>& weights,
               const std::vector<float>& bias, int out_c, int in_c, int kh,
               int kw, int stride, int pad);
Var avgpool2(const Var& a);  // 2x2 window, stride 2, floor output size
Var maxpool2(const Var& a);  // ties select the first element scanned
Var decimate(const Var& a, int fy, int fx);  // keep samples at multiples of f
Var upsample_nearest(const Var& a, int f);
// Mean over win x win blocks placed at `stride` steps (valid placements).
Var box_mean_stride(const Var& a, int win, int stride);
// y = (x + shift[c]) * scale[c]
Var scale_shift_channels(const Var& a, const std::vector<double>& scale,
                         const std::vector<double>& shift);

// ---- 1-D linear resampling tables (bilinear / bicubic / nearest) ----
struct ResampleTable {
  int in_size = 0, out_size = 0;
  std::vector<int> start;              // first source index per output
  std::vector<std::vector<double>> w;  // weights per output
};
ResampleTable make_table_nearest(int in_size, int out_size);
ResampleTable make_table_bilinear(int in_size, int out_size);
// Keys cubic kernel (a = -0.5); kernel is widened when minifying.
ResampleTable make_table_bicubic(int in_size, int out_size, bool antialias);
Var resample_rows(const Var& a, const ResampleTable& t);  // vertical axis
Var resample_cols(const Var& a, const ResampleTable& t);  // horizontal axis
Var resize_bilinear(const Var& a, int out_h, int out_w);

// ---- complex ----
struct CVar {
  Var re, im;
};
CVar fft2(const Var& a);            // unnormalized forward DFT per channel
CVar fft2c(const CVar& a);
CVar ifft2c(const CVar& a);         // includes 1/(h*w)
CVar cmul_mask(const CVar& a, const Tensor& mre, const Tensor& mim);
Var real_mul_mask(const Var& a, const Tensor& m);  // pointwise constant mask
CVar cmul(const CVar& a, const CVar& b);
CVar conj(const CVar& a);
Var cabs(const CVar& a, double eps);  // sqrt(re^2 + im^2 + eps)
// Central crop of an unshifted 2-D spectrum to out_h x out_w bins
// (frequency-domain downsampling by integer factors).
CVar spec_crop(const CVar& a, int out_h, int out_w);

}  // namespace pmet::ad

#endif  // PMET_AD_HPP_
