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

namespace pmet::metrics::internal {

Var mae_value(const Var& ref, const Var& dist) {
  return mean_all(abs_(sub(dist, ref)));
}

LocalStats local_stats(const Var& x, const Var& y, const Tensor& window) {
  LocalStats s;
  s.mu_x = filter2_same(x, window, Boundary::kMirror);
  s.mu_y = filter2_same(y, window, Boundary::kMirror);
  Var exx = filter2_same(square(x), window, Boundary::kMirror);
  Var eyy = filter2_same(square(y), window, Boundary::kMirror);
  Var exy = filter2_same(mul(x, y), window, Boundary::kMirror);
  s.var_x = sub(exx, square(s.mu_x));
  s.var_y = sub(eyy, square(s.mu_y));
  s.cov_xy = sub(exy, mul(s.mu_x, s.mu_y));
  return s;
}

Var downsample_box(const Var& x, int f) {
  if (f <= 1) return x;
  Tensor box(f, f, 1, 1.0 / (f * f));
  return decimate(filter2_same(x, box, Boundary::kMirror), f, f);
}

Var sample_std(const Var& x) {
  size_t n = x.val().size();
  Var m = mean_all(x);
  Var ss = sum_all(square(sub(x, m)));
  return sqrt_(adds(muls(ss, 1.0 / static_cast<double>(n - 1)), 1e-16));
}

Var where_ge0(const Var& s, const Var& a, const Var& b) {
  const Tensor& sv = s.val();
  Tensor mask(sv.height(), sv.width(), sv.channels());
  for (size_t i = 0; i < mask.size(); ++i)
    mask.data()[i] = sv.data()[i] >= 0 ? 1.0 : 0.0;
  Var m = Var::constant(mask);
  return add(mul(m, a), mul(sub(Var::scalar(1.0), m), b));
}

Var signed_pow(const Var& x, double p) {
  Var mag = pow_(adds(abs_(x), 1e-12), p);
  Var neg_branch = muls(mag, std::cos(M_PI * p));
  return where_ge0(x, mag, neg_branch);
}

}  // namespace pmet::metrics::internal
