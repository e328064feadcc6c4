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

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "pmet/ad.hpp"
#include "pmet/rng.hpp"

using namespace pmet;
using namespace pmet::ad;
using pmet::testutil::max_rel_fd_error;
using pmet::testutil::random_tensor;

TEST_CASE("pointwise chain gradients match finite differences") {
  Rng rng(11);
  Tensor x0 = random_tensor(rng, 6, 7, 2, 0.2, 0.9);
  auto build = [](const Var& x) {
    Var a = mul(tanh_(x), sqrt_(adds(x, 1.0)));
    Var b = div(adds(exp_(neg(x)), 0.5), adds(abs_(adds(x, -0.4)), 1.0));
    Var c = add(pow_(adds(x, 2.0), 1.7), log_(adds(x, 3.0)));
    Var d = maximum(a, muls(b, 0.7));
    Var e = minimum(d, adds(c, -1.0));
    return mean_all(add(square(e), relu_(adds(x, -0.5))));
  };
  CHECK(max_rel_fd_error(build, x0, 40, 1e-5, 7) < 1e-5);
}

TEST_CASE("scalar broadcast gradients") {
  Rng rng(12);
  Tensor x0 = random_tensor(rng, 4, 5, 1, 0.1, 1.0);
  auto build = [](const Var& x) {
    Var s = mean_all(x);
    Var centered = sub(x, s);
    Var v = mean_all(square(centered));
    return div(sum_all(mul(x, centered)), adds(sqrt_(adds(v, 1e-6)), 0.3));
  };
  CHECK(max_rel_fd_error(build, x0, 20, 1e-6, 3) < 1e-4);
}

TEST_CASE("pad boundaries and filters match finite differences") {
  Rng rng(13);
  Tensor x0 = random_tensor(rng, 9, 8, 1, 0.0, 1.0);
  Tensor k(3, 3, 1);
  for (int i = 0; i < 9; ++i) k.data()[i] = (i % 3 == 0 ? 0.2 : -0.1) + 0.05 * i;

  for (Boundary b : {Boundary::kMirror, Boundary::kReplicate, Boundary::kZero}) {
    auto build = [&k, b](const Var& x) {
      return mean_all(square(filter2_same(x, k, b)));
    };
    CHECK(max_rel_fd_error(build, x0, 30, 1e-6, 5) < 1e-5);
  }
}

TEST_CASE("filter2_valid is linear") {
  Rng rng(14);
  Tensor u = random_tensor(rng, 10, 10, 1), v = random_tensor(rng, 10, 10, 1);
  Tensor k(3, 3, 1);
  for (int i = 0; i < 9; ++i) k.data()[i] = 0.1 * (i - 4);
  double a = 1.7, b = -0.6;
  Tensor mix(10, 10, 1);
  for (size_t i = 0; i < mix.size(); ++i)
    mix.data()[i] = a * u.data()[i] + b * v.data()[i];
  Tensor fu = filter2_valid(Var::constant(u), k).val();
  Tensor fv = filter2_valid(Var::constant(v), k).val();
  Tensor fm = filter2_valid(Var::constant(mix), k).val();
  for (size_t i = 0; i < fm.size(); ++i)
    CHECK(fm.data()[i] == doctest::Approx(a * fu.data()[i] + b * fv.data()[i])
                              .epsilon(1e-10));
}

TEST_CASE("pool, decimate, resample gradients") {
  Rng rng(15);
  Tensor x0 = random_tensor(rng, 12, 10, 1, 0.0, 1.0);
  auto check = [&x0](const std::function<Var(const Var&)>& f) {
    auto build = [&f](const Var& x) { return mean_all(square(f(x))); };
    return max_rel_fd_error(build, x0, 25, 1e-6, 9);
  };
  CHECK(check([](const Var& x) { return avgpool2(x); }) < 1e-5);
  CHECK(check([](const Var& x) { return maxpool2(x); }) < 1e-5);
  CHECK(check([](const Var& x) { return decimate(x, 2, 2); }) < 1e-5);
  CHECK(check([](const Var& x) { return upsample_nearest(x, 2); }) < 1e-5);
  CHECK(check([](const Var& x) { return box_mean_stride(x, 4, 2); }) < 1e-5);
  CHECK(check([](const Var& x) { return resize_bilinear(x, 7, 17); }) < 1e-5);
  CHECK(check([](const Var& x) {
          auto t = make_table_bicubic(x.val().width(), 5, true);
          return resample_cols(x, t);
        }) < 1e-5);
  CHECK(check([](const Var& x) { return crop(x, 2, 3, 6, 5); }) < 1e-5);
  CHECK(check([](const Var& x) {
          return concat_channels({slice_channel(x, 0), muls(slice_channel(x, 0), 2.0)});
        }) < 1e-5);
}

TEST_CASE("conv_layer gradients") {
  Rng rng(16);
  Tensor x0 = random_tensor(rng, 8, 8, 3, -0.5, 0.5);
  std::vector<float> w(2 * 3 * 3 * 3);
  for (size_t i = 0; i < w.size(); ++i)
    w[i] = static_cast<float>(rng.next_double() - 0.5);
  std::vector<float> bias = {0.1f, -0.2f};
  auto build = [&](const Var& x) {
    Var c = conv_layer(x, w, bias, 2, 3, 3, 3, 1, 1);
    return mean_all(square(relu_(c)));
  };
  CHECK(max_rel_fd_error(build, x0, 40, 1e-6, 21) < 1e-5);

  std::vector<float> w2(2 * 3 * 2 * 2);
  for (size_t i = 0; i < w2.size(); ++i)
    w2[i] = static_cast<float>(rng.next_double() - 0.5);
  auto build_strided = [&](const Var& x) {
    Var c = conv_layer(x, w2, bias, 2, 3, 2, 2, 2, 0);
    return sum_all(square(c));
  };
  CHECK(max_rel_fd_error(build_strided, x0, 40, 1e-6, 22) < 1e-5);
}

TEST_CASE("fft chain gradients") {
  Rng rng(17);
  Tensor x0 = random_tensor(rng, 8, 8, 1, -1.0, 1.0);
  Tensor mre(8, 8, 1), mim(8, 8, 1);
  for (size_t i = 0; i < mre.size(); ++i) {
    mre.data()[i] = rng.next_double() - 0.5;
    mim.data()[i] = rng.next_double() - 0.5;
  }
  auto build = [&](const Var& x) {
    CVar spec = fft2(x);
    CVar filtered = cmul_mask(spec, mre, mim);
    CVar back = ifft2c(filtered);
    return mean_all(add(square(back.re), square(back.im)));
  };
  CHECK(max_rel_fd_error(build, x0, 30, 1e-6, 31) < 1e-5);

  auto build_crop = [&](const Var& x) {
    CVar spec = fft2(x);
    CVar small = spec_crop(cmul_mask(spec, mre, mim), 4, 4);
    CVar back = ifft2c(small);
    return mean_all(cabs(back, 1e-12));
  };
  CHECK(max_rel_fd_error(build_crop, x0, 30, 1e-6, 32) < 1e-4);
}

TEST_CASE("fft round trip is identity") {
  Rng rng(18);
  Tensor x0 = random_tensor(rng, 12, 16, 1, -2.0, 2.0);
  CVar spec = fft2(Var::constant(x0));
  CVar back = ifft2c(spec);
  CHECK(back.re.val().max_abs_diff(x0) < 1e-12);
  double imax = 0;
  for (size_t i = 0; i < back.im.val().size(); ++i)
    imax = std::max(imax, std::abs(back.im.val().data()[i]));
  CHECK(imax < 1e-12);
}

TEST_CASE("median gradient flows to the selected element") {
  Tensor x0(1, 5, 1);
  double vals[5] = {0.3, 0.9, 0.1, 0.7, 0.5};
  for (int i = 0; i < 5; ++i) x0.data()[i] = vals[i];
  Var leaf = Var::leaf(x0);
  Var m = median_all(leaf);
  CHECK(m.item() == doctest::Approx(0.5));
  backward(m);
  Tensor g = leaf.grad();
  for (int i = 0; i < 5; ++i) CHECK(g.data()[i] == doctest::Approx(i == 4 ? 1.0 : 0.0));
}

TEST_CASE("gradient of a sum equals sum of gradients") {
  Rng rng(19);
  Tensor x0 = random_tensor(rng, 6, 6, 1, 0.1, 0.9);
  auto f1 = [](const Var& x) { return mean_all(square(x)); };
  auto f2 = [](const Var& x) { return mean_all(tanh_(x)); };

  Var a = Var::leaf(x0);
  backward(add(f1(a), f2(a)));
  Tensor g_sum = a.grad();

  Var b = Var::leaf(x0);
  backward(f1(b));
  Tensor g1 = b.grad();
  Var c = Var::leaf(x0);
  backward(f2(c));
  Tensor g2 = c.grad();

  for (size_t i = 0; i < g_sum.size(); ++i)
    CHECK(g_sum.data()[i] == doctest::Approx(g1.data()[i] + g2.data()[i]).epsilon(1e-12));
}

TEST_CASE("repeated evaluation is bit identical") {
  Rng rng(20);
  Tensor x0 = random_tensor(rng, 16, 16, 1);
  auto run = [&x0]() {
    CVar spec = fft2(Var::constant(x0));
    Var y = mean_all(cabs(spec, 1e-20));
    return y.item();
  };
  double v1 = run(), v2 = run();
  CHECK(v1 == v2);
}
