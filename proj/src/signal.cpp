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

#include "pmet/signal.hpp"

#include <cmath>
#include <limits>

namespace pmet::signal {

using namespace pmet::ad;

Kernel Kernel::centered(Tensor taps) {
  if (taps.channels() != 1) throw std::invalid_argument("Kernel: taps must be 2-D");
  if (!taps.all_finite()) throw std::invalid_argument("Kernel: non-finite taps");
  Kernel k;
  k.anchor_y = (taps.height() - 1) / 2;
  k.anchor_x = (taps.width() - 1) / 2;
  k.taps = std::move(taps);
  return k;
}

Kernel gaussian_kernel(int size, double sigma) {
  Tensor t(size, size, 1);
  double c = (size - 1) / 2.0, sum = 0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double v = std::exp(-((y - c) * (y - c) + (x - c) * (x - c)) / (2 * sigma * sigma));
      t.at(0, y, x) = v;
      sum += v;
    }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) t.at(0, y, x) /= sum;
  return Kernel::centered(std::move(t));
}

Var convolve(const Var& img, const Kernel& k, Boundary b) {
  if (img.val().empty()) throw std::invalid_argument("convolve: empty image");
  if (!k.taps.all_finite()) throw std::invalid_argument("convolve: non-finite kernel");
  int kh = k.taps.height(), kw = k.taps.width();
  Var padded = pad(img, k.anchor_y, kh - 1 - k.anchor_y, k.anchor_x,
                   kw - 1 - k.anchor_x, b);
  return filter2_valid(padded, k.taps);
}

Tensor convolve(const Tensor& img, const Kernel& k, Boundary b) {
  return convolve(Var::constant(img), k, b).val();
}

Var to_luminance(const Var& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) throw std::invalid_argument("to_luminance: need 1 or 3 channels");
  Var r = slice_channel(img, 0), g = slice_channel(img, 1), b = slice_channel(img, 2);
  return add(add(muls(r, 0.299), muls(g, 0.587)), muls(b, 0.114));
}

Tensor to_luminance(const Tensor& img) {
  return to_luminance(Var::constant(img)).val();
}

Var resample(const Var& img, double factor, ResampleMethod m) {
  if (factor <= 0) throw std::invalid_argument("resample: factor must be positive");
  int oh = std::max(1, static_cast<int>(std::lround(img.height() * factor)));
  int ow = std::max(1, static_cast<int>(std::lround(img.width() * factor)));
  if (oh == img.height() && ow == img.width()) return img;
  ResampleTable rt, ct;
  switch (m) {
    case ResampleMethod::kNearest:
      rt = make_table_nearest(img.height(), oh);
      ct = make_table_nearest(img.width(), ow);
      break;
    case ResampleMethod::kBicubic:
      rt = make_table_bicubic(img.height(), oh, /*antialias=*/true);
      ct = make_table_bicubic(img.width(), ow, /*antialias=*/true);
      break;
  }
  return resample_cols(resample_rows(img, rt), ct);
}

Tensor resample(const Tensor& img, double factor, ResampleMethod m) {
  return resample(Var::constant(img), factor, m).val();
}

Tensor gradient_stencil_x(GradientOperator op) {
  Tensor k(3, 3, 1);
  switch (op) {
    case GradientOperator::kPrewitt: {
      const double v[9] = {1, 0, -1, 1, 0, -1, 1, 0, -1};
      for (int i = 0; i < 9; ++i) k.data()[i] = v[i] / 3.0;
      break;
    }
    case GradientOperator::kSobel: {
      const double v[9] = {1, 0, -1, 2, 0, -2, 1, 0, -1};
      for (int i = 0; i < 9; ++i) k.data()[i] = v[i] / 8.0;
      break;
    }
    case GradientOperator::kScharr: {
      const double v[9] = {3, 0, -3, 10, 0, -10, 3, 0, -3};
      for (int i = 0; i < 9; ++i) k.data()[i] = v[i] / 16.0;
      break;
    }
  }
  return k;
}

Var gradient_magnitude(const Var& img, GradientOperator op, double eps) {
  if (img.channels() != 1)
    throw std::invalid_argument("gradient_magnitude: grayscale input required");
  Tensor kx = gradient_stencil_x(op);
  Tensor ky(3, 3, 1);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) ky.at(0, y, x) = kx.at(0, x, y);
  Var gx = filter2_same(img, kx, Boundary::kMirror);
  Var gy = filter2_same(img, ky, Boundary::kMirror);
  return sqrt_(adds(add(square(gx), square(gy)), eps));
}

Tensor gradient_map(const Tensor& img, GradientOperator op) {
  return gradient_magnitude(Var::constant(img), op, 0.0).val();
}

Var soft_quantize(const Var& z, const std::vector<double>& centers, double scale) {
  if (centers.size() < 2) throw std::invalid_argument("soft_quantize: need at least 2 centers");
  if (!(scale > 0)) throw std::invalid_argument("soft_quantize: scale must be positive");
  if (!z.val().all_finite()) throw std::invalid_argument("soft_quantize: non-finite input");
  // softmax over -scale*(z-c_j)^2, stabilized against the running maximum.
  Var denom, numer, running_max;
  std::vector<Var> sq;
  sq.reserve(centers.size());
  for (size_t j = 0; j < centers.size(); ++j) {
    Var e = muls(square(adds(z, -centers[j])), -scale);
    sq.push_back(e);
    running_max = j == 0 ? e : maximum(running_max, e);
  }
  Var mstop = stopgrad(running_max);
  for (size_t j = 0; j < centers.size(); ++j) {
    Var w = exp_(sub(sq[j], mstop));
    denom = j == 0 ? w : add(denom, w);
    Var t = muls(w, centers[j]);
    numer = j == 0 ? t : add(numer, t);
  }
  return div(numer, denom);
}

Tensor soft_quantize(const Tensor& z, const std::vector<double>& centers, double scale) {
  return soft_quantize(Var::constant(z), centers, scale).val();
}

double psnr(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a.data()[i] - b.data()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse <= 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace pmet::signal
