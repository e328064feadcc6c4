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

#ifndef PMET_TENSOR_HPP_
#define PMET_TENSOR_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmet {

// Dense planar raster: `channels` planes of `height` x `width` doubles.
// Images use channels in {1,3} with nominal sample range [0,1]; intermediate
// feature buffers may use any channel count and range.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int height, int width, int channels, double fill = 0.0)
      : h_(height), w_(width), c_(channels) {
    if (height < 1 || width < 1 || channels < 1)
      throw std::invalid_argument("Tensor: non-positive dimensions");
    data_.assign(static_cast<size_t>(h_) * w_ * c_, fill);
  }

  static Tensor scalar(double v) {
    Tensor t(1, 1, 1);
    t.data_[0] = v;
    return t;
  }

  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }
  bool empty() const { return data_.empty(); }
  size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double* plane(int c) { return data_.data() + static_cast<size_t>(c) * h_ * w_; }
  const double* plane(int c) const {
    return data_.data() + static_cast<size_t>(c) * h_ * w_;
  }

  double& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * h_ + y) * w_ + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * h_ + y) * w_ + x];
  }

  bool same_shape(const Tensor& o) const {
    return h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
  }
  bool is_scalar() const { return h_ == 1 && w_ == 1 && c_ == 1; }

  // Value of a 1x1x1 tensor.
  double item() const {
    if (!is_scalar()) throw std::logic_error("Tensor::item: not a scalar");
    return data_[0];
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double min() const {
    double m = data_[0];
    for (double v : data_) m = v < m ? v : m;
    return m;
  }
  double max() const {
    double m = data_[0];
    for (double v : data_) m = v > m ? v : m;
    return m;
  }
  double sum() const {
    double s = 0;
    for (double v : data_) s += v;
    return s;
  }
  double mean() const { return sum() / static_cast<double>(size()); }

  double max_abs_diff(const Tensor& o) const {
    if (!same_shape(o)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0;
    for (size_t i = 0; i < data_.size(); ++i) {
      double d = std::abs(data_[i] - o.data_[i]);
      if (d > m) m = d;
    }
    return m;
  }

  std::string shape_str() const {
    return std::to_string(h_) + "x" + std::to_string(w_) + "x" + std::to_string(c_);
  }

 private:
  int h_ = 0, w_ = 0, c_ = 0;
  std::vector<double> data_;
};

// Validates the image contract shared by all metric entry points.
inline void validate_image(const Tensor& t, const char* what) {
  if (t.empty()) throw std::invalid_argument(std::string(what) + ": empty image");
  if (t.channels() != 1 && t.channels() != 3)
    throw std::invalid_argument(std::string(what) + ": channels must be 1 or 3");
  if (!t.all_finite())
    throw std::invalid_argument(std::string(what) + ": non-finite samples");
}

}  // namespace pmet

#endif  // PMET_TENSOR_HPP_
