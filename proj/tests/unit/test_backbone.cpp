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
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "pmet/backbone.hpp"
#include "pmet/metrics.hpp"

using namespace pmet;
using namespace pmet::backbone;

namespace {

const char* tiny_path() { return PMET_SOURCE_DIR "/weights/backbone_tiny.pmbw"; }

// Matches the deterministic pseudo-image of the reference-side script.
Tensor det_image(int h, int w, int c, int salt) {
  Tensor img(h, w, c);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = 0.5 +
                   0.25 * std::sin(2 * M_PI * (x / (8.0 + 3 * ch + salt))) *
                       std::cos(2 * M_PI * (y / (11.0 + 2 * ch + salt))) +
                   0.1 * std::sin(2 * M_PI * (x + y) / (23.0 + salt));
        img.at(ch, y, x) = std::clamp(v, 0.0, 1.0);
      }
  return img;
}

BackboneWeights small_net(bool zero_bias) {
  Rng rng(77);
  BackboneWeights w;
  auto conv = [&rng, zero_bias](int ic, int oc) {
    Layer l;
    l.kind = Layer::Kind::kConv;
    l.in_c = ic;
    l.out_c = oc;
    l.kh = l.kw = 3;
    l.weights.resize(static_cast<size_t>(oc) * ic * 9);
    for (auto& v : l.weights) v = static_cast<float>(0.3 * (rng.next_double() - 0.5));
    l.bias.assign(oc, 0.0f);
    if (!zero_bias)
      for (auto& v : l.bias) v = static_cast<float>(0.1 * (rng.next_double() - 0.5));
    return l;
  };
  w.layers.push_back(conv(3, 4));
  w.layers.push_back({Layer::Kind::kRelu});
  w.layers.push_back({Layer::Kind::kAvgPool});
  w.layers.push_back(conv(4, 6));
  w.layers.push_back({Layer::Kind::kRelu});
  w.stage_taps = {1, 4};
  w.norm_mean = {0.5, 0.5, 0.5};
  w.norm_std = {0.5, 0.5, 0.5};
  w.lpips_weights.assign(10, 0.1f);
  w.dists_alpha.assign(13, 0.5f);
  w.dists_beta.assign(13, 0.5f);
  return w;
}

}  // namespace

TEST_CASE("weight file round trip is bit-exact and loads idempotently") {
  BackboneWeights w = small_net(false);
  std::string path = "roundtrip.pmbw";
  save_weights(w, path);
  BackboneWeights r1 = load_weights(path);
  BackboneWeights r2 = load_weights(path);
  REQUIRE(r1.layers.size() == w.layers.size());
  for (size_t i = 0; i < w.layers.size(); ++i) {
    CHECK(r1.layers[i].kind == w.layers[i].kind);
    CHECK(r1.layers[i].weights == w.layers[i].weights);
    CHECK(r1.layers[i].bias == w.layers[i].bias);
    CHECK(r1.layers[i].weights == r2.layers[i].weights);
  }
  CHECK(r1.stage_taps == w.stage_taps);
  CHECK(r1.lpips_weights == w.lpips_weights);
  std::remove(path.c_str());
}

TEST_CASE("weight file rejects corruption") {
  BackboneWeights w = small_net(false);
  std::string path = "corrupt.pmbw";
  save_weights(w, path);

  auto mutate = [&path](size_t offset, char value) {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(offset));
    f.put(value);
  };
  mutate(0, 'X');  // magic
  CHECK_THROWS(load_weights(path));

  save_weights(w, path);
  mutate(20, 0x7f);  // payload byte; CRC must catch it
  CHECK_THROWS(load_weights(path));

  save_weights(w, path);
  {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
    buf.resize(buf.size() / 2);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  CHECK_THROWS(load_weights(path));
  std::remove(path.c_str());
}

TEST_CASE("zero input with zero biases produces zero stages") {
  BackboneWeights w = small_net(true);
  w.norm_mean = {0.0, 0.0, 0.0};
  w.norm_std = {1.0, 1.0, 1.0};
  Tensor zero(16, 16, 3, 0.0);
  auto stages = forward(w, zero);
  REQUIRE(stages.size() == 2);
  for (const Tensor& s : stages)
    for (size_t i = 0; i < s.size(); ++i) CHECK(s.data()[i] == 0.0);
}

TEST_CASE("identical inputs give identical stacks") {
  BackboneWeights w = small_net(false);
  Tensor img = det_image(16, 16, 3, 2);
  auto s1 = forward(w, img);
  auto s2 = forward(w, img);
  for (size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].max_abs_diff(s2[i]) == 0.0);
}

TEST_CASE("zero-bias network is positively homogeneous") {
  BackboneWeights w = small_net(true);
  w.norm_mean = {0.0, 0.0, 0.0};
  w.norm_std = {1.0, 1.0, 1.0};
  Tensor img = det_image(16, 16, 3, 3);
  Tensor scaled = img;
  for (size_t i = 0; i < scaled.size(); ++i) scaled.data()[i] *= 2.5;
  auto s1 = forward(w, img);
  auto s2 = forward(w, scaled);
  for (size_t i = 0; i < s1.size(); ++i)
    for (size_t k = 0; k < s1[i].size(); ++k)
      CHECK(s2[i].data()[k] == doctest::Approx(2.5 * s1[i].data()[k]).epsilon(1e-10));
}

TEST_CASE("backward matches directional finite differences") {
  BackboneWeights w = small_net(false);
  Tensor img = det_image(12, 12, 3, 4);
  Rng rng(101);
  auto stages = forward(w, img);
  std::vector<Tensor> cot;
  for (const Tensor& s : stages) {
    Tensor c(s.height(), s.width(), s.channels());
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] = rng.next_double() - 0.5;
    cot.push_back(c);
  }
  Tensor grad = backward(w, img, cot);

  // Direction v: equality <grad, v> = d/dt sum_s <stages(img + t v), cot_s>.
  Tensor v(img.height(), img.width(), img.channels());
  for (size_t i = 0; i < v.size(); ++i) v.data()[i] = rng.next_double() - 0.5;
  double lhs = 0;
  for (size_t i = 0; i < v.size(); ++i) lhs += grad.data()[i] * v.data()[i];

  double eps = 1e-6;
  auto probe = [&](double t) {
    Tensor x = img;
    for (size_t i = 0; i < x.size(); ++i) x.data()[i] += t * v.data()[i];
    auto st = forward(w, x);
    double acc = 0;
    for (size_t s = 0; s < st.size(); ++s)
      for (size_t i = 0; i < st[s].size(); ++i)
        acc += st[s].data()[i] * cot[s].data()[i];
    return acc;
  };
  double rhs = (probe(eps) - probe(-eps)) / (2 * eps);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));

  // Zero cotangents give a zero gradient image.
  std::vector<Tensor> zeros;
  for (const Tensor& s : stages) zeros.push_back(Tensor(s.height(), s.width(), s.channels()));
  Tensor zg = backward(w, img, zeros);
  for (size_t i = 0; i < zg.size(); ++i) CHECK(zg.data()[i] == 0.0);
}

TEST_CASE("single-pixel cotangent stays within its receptive field") {
  BackboneWeights w = small_net(false);
  Tensor img = det_image(16, 16, 3, 5);
  auto stages = forward(w, img);
  std::vector<Tensor> cot;
  for (const Tensor& s : stages) cot.push_back(Tensor(s.height(), s.width(), s.channels()));
  // One unit at stage 0 (after first relu), spatial (2,2): receptive field 3x3.
  cot[0].at(1, 2, 2) = 1.0;
  Tensor g = backward(w, img, cot);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        if (std::abs(y - 2) > 1 || std::abs(x - 2) > 1)
          CHECK(g.at(c, y, x) == 0.0);
}

TEST_CASE("bundled tiny backbone matches the torch reference") {
  BackboneWeights w = load_weights(tiny_path());
  Tensor x1 = det_image(64, 64, 3, 0);
  Tensor x2 = det_image(64, 64, 3, 1);
  auto stages = forward(w, x1);
  REQUIRE(stages.size() == 5);
  // Frozen from tests/oracle/backbone_torch_check.py (float64 torch).
  const double expected_sums[5] = {8532.761689080951, 5721.442278733226,
                                   4106.081422525808, 1929.7526846828557,
                                   347.98874407500136};
  const int expected_c[5] = {12, 24, 48, 64, 64};
  for (int s = 0; s < 5; ++s) {
    CHECK(stages[s].channels() == expected_c[s]);
    CHECK(stages[s].sum() ==
          doctest::Approx(expected_sums[s]).epsilon(1e-9));
  }
  metrics::EvalContext ctx{&w};
  CHECK(metrics::evaluate("lpips", x1, x2, ctx).value ==
        doctest::Approx(0.09048883095929264).epsilon(1e-9));
  CHECK(metrics::evaluate("dists", x1, x2, ctx).value ==
        doctest::Approx(0.19648071553049284).epsilon(1e-9));
}

TEST_CASE("deep metric gradients match finite differences") {
  BackboneWeights w = load_weights(tiny_path());
  Rng rng(102);
  Tensor ref = testutil::smooth_tensor(rng, 32, 32, 3);
  Tensor dist = testutil::smooth_tensor(rng, 32, 32, 3);
  metrics::EvalContext ctx{&w};
  for (const char* id : {"lpips", "dists"}) {
    auto build = [&](const ad::Var& d) {
      return metrics::loss_graph(id, ad::Var::constant(ref), d, ctx);
    };
    CHECK(testutil::max_rel_fd_error(build, dist, 20, 1e-5, 103) < 1e-4);
  }
}
