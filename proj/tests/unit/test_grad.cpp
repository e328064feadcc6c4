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
#include "pmet/grad.hpp"
#include "pmet/metrics.hpp"
#include "metrics/common.hpp"

using namespace pmet;
using pmet::grad::finite_diff_check;
using pmet::grad::loss_gradient;

namespace {

Tensor textured(int n, uint64_t seed, int channels = 1) {
  Rng rng(seed);
  Tensor img(n, n, channels);
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double v = 0.5 + 0.2 * std::sin(2 * M_PI * y / 24.0 + c) *
                             std::cos(2 * M_PI * x / 17.0) +
                   0.12 * (rng.next_double() - 0.5);
        img.at(c, y, x) = std::clamp(v, 0.02, 0.98);
      }
  return img;
}

Tensor perturbed(const Tensor& img, double sigma, uint64_t seed) {
  Rng rng(seed);
  Tensor out = img;
  for (size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::clamp(img.data()[i] + sigma * rng.next_gaussian(), 0.01, 0.99);
  return out;
}

}  // namespace

TEST_CASE("mae gradient is the per-sample sign over the count") {
  Tensor ref = textured(32, 200, 3);
  Tensor dist = perturbed(ref, 0.05, 201);
  Tensor g = loss_gradient("mae", ref, dist);
  double n = static_cast<double>(ref.size());
  for (size_t i = 0; i < g.size(); ++i) {
    double expect = (dist.data()[i] > ref.data()[i] ? 1.0 : -1.0) / n;
    if (dist.data()[i] != ref.data()[i])
      CHECK(g.data()[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("distance metrics are stationary at the identity") {
  Tensor ref = textured(128, 202);
  for (const char* id : {"nlpd", "gmsd", "mae"}) {
    Tensor g = loss_gradient(id, ref, ref);
    double norm = 0;
    for (size_t i = 0; i < g.size(); ++i) norm = std::max(norm, std::abs(g.data()[i]));
    CHECK(norm < 1e-6);
  }
}

TEST_CASE("finite_diff_check contract") {
  Tensor ref = textured(32, 203);
  Tensor dist = perturbed(ref, 0.04, 204);
  CHECK_THROWS(finite_diff_check("mae", ref, dist, 0, 1));
  CHECK_THROWS(finite_diff_check("mae", ref, dist, 10, 1, 0.0));
  auto rep = finite_diff_check("mae", ref, dist, 100, 7);
  CHECK(rep.checked_coordinates == 100);
  CHECK(rep.max_rel_error < 1e-6);
}

// Central-difference step per metric: compositions dense in |.| or relu
// kinks (feature similarity, deep metrics) need the smaller step so probes
// rarely straddle a crease; the statistics-heavy ones prefer the larger step,
// which keeps evaluation roundoff out of the quotient.
double probe_step(const std::string& id) {
  if (id == "fsim" || id == "lpips" || id == "dists") return 1e-5;
  return 1e-4;
}

TEST_CASE("every metric passes a quick finite-difference audit at min size") {
  auto bb = backbone::load_weights(PMET_SOURCE_DIR "/weights/backbone_tiny.pmbw");
  metrics::EvalContext ctx{&bb};
  for (const auto& d : metrics::list_metrics()) {
    int n = d.min_size;
    if (n % d.size_multiple != 0) n += d.size_multiple - n % d.size_multiple;
    int channels = d.color_policy == metrics::ColorPolicy::kNativeColor ? 3 : 1;
    Tensor ref = textured(n, 300 + d.min_size, channels);
    Tensor dist = perturbed(ref, 0.06, 301 + d.min_size);
    auto rep = finite_diff_check(d.id, ref, dist, 10, 42, probe_step(d.id), ctx);
    INFO(d.id);
    CHECK(rep.max_rel_error < 1e-3);
  }
}

TEST_CASE("ms-ssim reduced three-scale variant passes central differences") {
  Tensor ref = textured(48, 205);
  Tensor dist = perturbed(ref, 0.05, 206);
  auto build = [&](const ad::Var& d) {
    return ad::neg(metrics::internal::ms_ssim_value(ad::Var::constant(ref), d, 3));
  };
  CHECK(testutil::max_rel_fd_error(build, dist, 30, 1e-4, 43) < 1e-3);
}

TEST_CASE("gradient of a sum of metric losses is the sum of gradients") {
  Tensor ref = textured(128, 207);
  Tensor dist = perturbed(ref, 0.05, 208);
  ad::Var leaf = ad::Var::leaf(dist);
  ad::Var total = ad::add(metrics::loss_graph("mae", ad::Var::constant(ref), leaf, {}),
                          metrics::loss_graph("gmsd", ad::Var::constant(ref), leaf, {}));
  ad::backward(total);
  Tensor g_sum = leaf.grad();
  Tensor g1 = loss_gradient("mae", ref, dist);
  Tensor g2 = loss_gradient("gmsd", ref, dist);
  for (size_t i = 0; i < g_sum.size(); ++i)
    CHECK(g_sum.data()[i] ==
          doctest::Approx(g1.data()[i] + g2.data()[i]).epsilon(1e-10));
}

TEST_CASE("gradients are translation equivariant in the interior") {
  // Exactly 64-periodic content so a circular shift is a clean translation,
  // shifted by an even amount to respect the downsampling lattice.
  int N = 64, shift = 4;
  Tensor ref(N, N, 1), dist(N, N, 1);
  Rng rng(209);
  for (int y = 0; y < N; ++y)
    for (int x = 0; x < N; ++x) {
      double v = 0.5 + 0.2 * std::sin(2 * M_PI * y / 16.0) * std::cos(2 * M_PI * x / 8.0) +
                 0.1 * std::sin(2 * M_PI * (x + y) / 32.0);
      ref.at(0, y, x) = std::clamp(v, 0.02, 0.98);
    }
  dist = perturbed(ref, 0.05, 210);
  Tensor ref_s(N, N, 1), dist_s(N, N, 1);
  for (int y = 0; y < N; ++y)
    for (int x = 0; x < N; ++x) {
      ref_s.at(0, y, x) = ref.at(0, (y + shift) % N, (x + shift) % N);
      dist_s.at(0, y, x) = dist.at(0, (y + shift) % N, (x + shift) % N);
    }
  auto interior_err = [&](const char* id) {
    Tensor g = loss_gradient(id, ref, dist);
    Tensor gs = loss_gradient(id, ref_s, dist_s);
    double max_err = 0;
    for (int y = 12; y < 52; ++y)
      for (int x = 12; x < 52; ++x)
        max_err = std::max(max_err, std::abs(gs.at(0, y, x) -
                                             g.at(0, (y + shift) % N, (x + shift) % N)));
    return max_err;
  };
  CHECK(interior_err("mae") < 1e-8);
  // Standard-deviation pooling couples every gradient entry to the mirror
  // border, whose content changes under the shift; the interior residual is
  // O(border difference / map size) rather than roundoff.
  CHECK(interior_err("gmsd") < 1e-3);
}
