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
#include <complex>

#include "doctest.h"
#include "helpers.hpp"
#include "pmet/phasecong.hpp"
#include "pmet/pyramid.hpp"

using namespace pmet;
using namespace pmet::signal;
using pmet::testutil::random_tensor;
using pmet::testutil::smooth_tensor;

TEST_CASE("gaussian pyramid of a constant stays constant") {
  Tensor img(64, 64, 1, 0.5);
  Pyramid p = gaussian_pyramid(img, 3);
  REQUIRE(p.levels.size() == 3);
  for (const Tensor& level : p.levels)
    for (size_t i = 0; i < level.size(); ++i)
      CHECK(level.data()[i] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gaussian pyramid with one level returns the input") {
  Rng rng(40);
  Tensor img = random_tensor(rng, 16, 16, 1);
  Pyramid p = gaussian_pyramid(img, 1);
  REQUIRE(p.levels.size() == 1);
  CHECK(p.levels[0].max_abs_diff(img) == 0.0);
}

TEST_CASE("gaussian pyramid sizes and blur-then-decimate oracle") {
  Rng rng(41);
  Tensor img = random_tensor(rng, 64, 64, 1);
  Pyramid p = gaussian_pyramid(img, 4);
  REQUIRE(p.levels.size() == 4);
  CHECK(p.levels[1].height() == 32);
  CHECK(p.levels[2].height() == 16);
  CHECK(p.levels[3].height() == 8);

  // Independent oracle: direct separable blur with symmetric folding,
  // then take every other sample.
  auto fold = [](int i, int n) {
    int m = 2 * n;
    int j = ((i % m) + m) % m;
    return j < n ? j : m - 1 - j;
  };
  const double k[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
  Tensor cur = img;
  for (int level = 1; level < 4; ++level) {
    int h = cur.height(), w = cur.width();
    Tensor tmp(h, w, 1), blur(h, w, 1);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0;
        for (int t = -2; t <= 2; ++t) s += k[t + 2] * cur.at(0, y, fold(x + t, w));
        tmp.at(0, y, x) = s;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0;
        for (int t = -2; t <= 2; ++t) s += k[t + 2] * tmp.at(0, fold(y + t, h), x);
        blur.at(0, y, x) = s;
      }
    Tensor dec((h + 1) / 2, (w + 1) / 2, 1);
    for (int y = 0; y < dec.height(); ++y)
      for (int x = 0; x < dec.width(); ++x) dec.at(0, y, x) = blur.at(0, 2 * y, 2 * x);
    CHECK(p.levels[level].max_abs_diff(dec) < 1e-12);
    cur = dec;
  }
}

TEST_CASE("gaussian pyramid rejects images too small for the level count") {
  Tensor img(8, 8, 1, 0.1);
  CHECK_THROWS(gaussian_pyramid(img, 5));
}

TEST_CASE("laplacian pyramid round trip and constant behavior") {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    Tensor img = random_tensor(rng, 17 + trial % 16, 16 + trial % 9, 1);
    Pyramid p = laplacian_pyramid(img, 3);
    Tensor rec = collapse_laplacian(p);
    CHECK(rec.max_abs_diff(img) < 1e-6);
  }

  Tensor flat(32, 32, 1, 0.25);
  Pyramid p = laplacian_pyramid(flat, 4);
  for (size_t level = 0; level + 1 < p.levels.size(); ++level)
    for (size_t i = 0; i < p.levels[level].size(); ++i)
      CHECK(std::abs(p.levels[level].data()[i]) < 1e-12);
  const Tensor& residual = p.levels.back();
  for (size_t i = 0; i < residual.size(); ++i)
    CHECK(residual.data()[i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("laplacian pyramid gradients match finite differences") {
  Rng rng(43);
  Tensor img = random_tensor(rng, 12, 12, 1);
  auto build = [](const ad::Var& x) {
    auto bands = laplacian_pyramid(x, 3);
    ad::Var acc = ad::mean_all(ad::square(bands[0]));
    for (size_t i = 1; i < bands.size(); ++i)
      acc = ad::add(acc, ad::mean_all(ad::square(bands[i])));
    return acc;
  };
  CHECK(testutil::max_rel_fd_error(build, img, 25, 1e-6, 44) < 1e-5);
}

TEST_CASE("steerable pyramid bands of a constant are negligible") {
  Tensor img(32, 32, 1, 0.6);
  SteerablePyramid p = steerable_complex_pyramid(img, 3, 4);
  for (const auto& scale : p.bands)
    for (const auto& [re, im] : scale)
      for (size_t i = 0; i < re.size(); ++i) {
        CHECK(std::abs(re.data()[i]) < 1e-8);
        CHECK(std::abs(im.data()[i]) < 1e-8);
      }
}

TEST_CASE("steerable pyramid responds to an impulse symmetrically under 90 deg") {
  // With 4 orientations, rotating the input by 90 degrees permutes the
  // orientation bands (o -> o+2 mod 4) up to the same spatial rotation.
  Tensor img(32, 32, 1, 0.0);
  img.at(0, 16, 16) = 1.0;
  SteerablePyramid p = steerable_complex_pyramid(img, 2, 4);

  Tensor rot(32, 32, 1, 0.0);
  // Rotation by 90 degrees about the same center for even sizes maps
  // (y, x) -> (x, 31 - y); the impulse at (16,16) lands on (16, 15).
  rot.at(0, 16, 15) = 1.0;
  SteerablePyramid pr = steerable_complex_pyramid(rot, 2, 4);

  for (int s = 0; s < 2; ++s)
    for (int o = 0; o < 4; ++o) {
      // Compare total magnitude energy between permuted bands.
      double e1 = 0, e2 = 0;
      auto& [re1, im1] = p.bands[s][o];
      auto& [re2, im2] = pr.bands[s][(o + 2) % 4];
      for (size_t i = 0; i < re1.size(); ++i) {
        e1 += re1.data()[i] * re1.data()[i] + im1.data()[i] * im1.data()[i];
        e2 += re2.data()[i] * re2.data()[i] + im2.data()[i] * im2.data()[i];
      }
      CHECK(e1 == doctest::Approx(e2).epsilon(1e-8));
    }
}

TEST_CASE("steerable pyramid matches a direct FFT-domain construction") {
  Rng rng(45);
  Tensor img = smooth_tensor(rng, 64, 64, 1);
  const int scales = 2, orients = 3;
  SteerablePyramid p = steerable_complex_pyramid(img, scales, orients);

  // Independent construction: explicit DFT via std::complex loops is too slow
  // for 64x64 at O(n^4); instead verify scale 0 (no spectrum cropping) with a
  // direct mask built here and the engine's own FFT treated as a black box
  // through a reference matrix multiply on rows/cols would still be O(n^3).
  // A 16x16 crop keeps the full DFT oracle tractable.
  Tensor small(16, 16, 1);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) small.at(0, y, x) = img.at(0, y + 8, x + 8);
  SteerablePyramid ps = steerable_complex_pyramid(small, 1, orients);

  const int n = 16;
  using cd = std::complex<double>;
  std::vector<cd> spec(n * n);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      cd acc = 0;
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          acc += small.at(0, y, x) *
                 std::exp(cd(0, -2 * M_PI * (double(u) * y + double(v) * x) / n));
      spec[u * n + v] = acc;
    }
  auto rc_low = [](double r, double rc) {
    if (r <= rc / 2) return 1.0;
    if (r >= rc) return 0.0;
    return std::cos(0.5 * M_PI * std::log2(2.0 * r / rc));
  };
  for (int o = 0; o < orients; ++o) {
    std::vector<cd> masked(n * n);
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) {
        int fu = u <= (n - 1) / 2 ? u : u - n;
        int fv = v <= (n - 1) / 2 ? v : v - n;
        double ry = double(fu) / n, rx = double(fv) / n;
        double r = std::max(std::sqrt(rx * rx + ry * ry), 1e-12);
        double theta = std::atan2(ry, rx);
        double lo = rc_low(r, 0.5);  // overall low-pass stage
        double hi_in = rc_low(r, 0.25);
        double band = std::sqrt(std::max(0.0, 1.0 - hi_in * hi_in));
        double d = theta - M_PI * o / orients;
        while (d > M_PI) d -= 2 * M_PI;
        while (d < -M_PI) d += 2 * M_PI;
        double fac = 2.0, num = 1.0, den = 1.0;
        for (int i = 2; i <= orients - 1; ++i) num *= i;
        for (int i = 2; i <= 2 * (orients - 1); ++i) den *= i;
        double alpha = std::pow(2.0, orients - 1) * num / std::sqrt(orients * den);
        double ang = std::abs(d) < M_PI / 2 ? alpha * std::pow(std::cos(d), orients - 1)
                                            : 0.0;
        masked[u * n + v] = spec[u * n + v] * (lo * band * ang * fac);
      }
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        cd acc = 0;
        for (int u = 0; u < n; ++u)
          for (int v = 0; v < n; ++v)
            acc += masked[u * n + v] *
                   std::exp(cd(0, 2 * M_PI * (double(u) * y + double(v) * x) / n));
        acc /= double(n * n);
        CHECK(ps.bands[0][o].first.at(0, y, x) == doctest::Approx(acc.real()).epsilon(1e-9));
        CHECK(ps.bands[0][o].second.at(0, y, x) == doctest::Approx(acc.imag()).epsilon(1e-9));
      }
  }
}

TEST_CASE("steerable pyramid input contract") {
  Tensor color(32, 32, 3, 0.5);
  CHECK_THROWS(steerable_complex_pyramid(color, 3, 4));
  Tensor odd(30, 30, 1, 0.5);
  CHECK_THROWS(steerable_complex_pyramid(odd, 3, 4));
}

TEST_CASE("steerable pyramid gradients match finite differences") {
  Rng rng(46);
  Tensor img = smooth_tensor(rng, 16, 16, 1);
  auto build = [](const ad::Var& x) {
    SteerablePyramidV p = steerable_complex_pyramid(x, 2, 2);
    ad::Var acc;
    bool first = true;
    for (auto& scale : p.bands)
      for (auto& band : scale) {
        ad::Var e = ad::mean_all(ad::add(ad::square(band.re), ad::square(band.im)));
        acc = first ? e : ad::add(acc, e);
        first = false;
      }
    acc = ad::add(acc, ad::mean_all(ad::square(p.lowpass)));
    return ad::add(acc, ad::mean_all(ad::square(p.highpass)));
  };
  CHECK(testutil::max_rel_fd_error(build, img, 25, 1e-6, 47) < 1e-5);
}

TEST_CASE("phase congruency basics") {
  LogGaborBank bank = log_gabor_bank(4, 4);

  // No structure: the normalized energy stays at the noise floor.
  Tensor flat(64, 64, 1, 0.5);
  Tensor pc_flat = phase_congruency(flat, bank, {});
  for (size_t i = 0; i < pc_flat.size(); ++i) CHECK(pc_flat.data()[i] < 1e-6);

  // A step edge produces a ridge on the edge column.
  Tensor step(64, 64, 1);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) step.at(0, y, x) = x < 32 ? 0.25 : 0.75;
  Tensor pc = phase_congruency(step, bank, {});
  for (size_t i = 0; i < pc.size(); ++i) {
    CHECK(pc.data()[i] >= 0.0);
    CHECK(pc.data()[i] <= 1.0 + 1e-12);
  }
  // Brute-force scan of the ridge column over the interior (the image wraps
  // under frequency-domain filtering, so the border also carries a ridge).
  int row = 32;
  int best = 16;
  for (int x = 16; x < 48; ++x)
    if (pc.at(0, row, x) > pc.at(0, row, best)) best = x;
  CHECK(std::abs(best - 31.5) <= 1.0);
}

TEST_CASE("phase congruency of a grating matches a direct per-pixel computation") {
  LogGaborBank bank = log_gabor_bank(3, 4);
  Tensor grating(48, 48, 1);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x)
      grating.at(0, y, x) = 0.5 + 0.4 * std::cos(2 * M_PI * x / 8.0);
  Tensor pc = phase_congruency(grating, bank, {});

  // Independent recomputation of the PC formula from the raw band responses.
  auto resp = log_gabor_responses(ad::Var::constant(grating), bank);
  const double eps = 1e-4, k_noise = 2.0, cut_off = 0.5, g_gain = 10.0;
  int ns = bank.scales, no = bank.orientations;
  int h = 48, w = 48;
  std::vector<double> energy_all(h * w, 0.0), an_all(h * w, 0.0);
  for (int o = 0; o < no; ++o) {
    std::vector<double> se(h * w, 0), so(h * w, 0), sa(h * w, 0), ma(h * w, 0);
    for (int s = 0; s < ns; ++s) {
      const Tensor& re = resp[s][o].re.val();
      const Tensor& im = resp[s][o].im.val();
      for (int i = 0; i < h * w; ++i) {
        double a = std::sqrt(re.data()[i] * re.data()[i] +
                             im.data()[i] * im.data()[i] + 1e-24);
        se[i] += re.data()[i];
        so[i] += im.data()[i];
        sa[i] += a;
        ma[i] = std::max(ma[i], a);
      }
    }
    std::vector<double> noise_amp(h * w);
    {
      const Tensor& re = resp[0][o].re.val();
      const Tensor& im = resp[0][o].im.val();
      for (int i = 0; i < h * w; ++i)
        noise_amp[i] = std::sqrt(re.data()[i] * re.data()[i] +
                                 im.data()[i] * im.data()[i] + 1e-24);
    }
    std::sort(noise_amp.begin(), noise_amp.end());
    double med = 0.5 * (noise_amp[h * w / 2 - 1] + noise_amp[h * w / 2]);
    double tau = med / std::sqrt(std::log(4.0));
    double scale_sum = (1.0 - std::pow(1.0 / bank.mult, ns)) / (1.0 - 1.0 / bank.mult);
    double T = tau * scale_sum *
               (std::sqrt(M_PI / 2.0) + k_noise * std::sqrt((4.0 - M_PI) / 2.0));
    for (int i = 0; i < h * w; ++i) {
      double xe = std::sqrt(se[i] * se[i] + so[i] * so[i] + 1e-24) + eps;
      double me = se[i] / xe, mo = so[i] / xe;
      double en = 0;
      for (int s = 0; s < ns; ++s) {
        double re = resp[s][o].re.val().data()[i];
        double im = resp[s][o].im.val().data()[i];
        en += re * me + im * mo - std::abs(re * mo - im * me);
      }
      en = std::max(en - T, 0.0);
      double width = (sa[i] / (ma[i] + eps) - 1.0) / (ns - 1);
      double weight = 1.0 / (1.0 + std::exp(g_gain * (cut_off - width)));
      energy_all[i] += weight * en;
      an_all[i] += sa[i];
    }
  }
  for (int i = 0; i < h * w; ++i)
    CHECK(pc.data()[i] ==
          doctest::Approx(energy_all[i] / (an_all[i] + eps)).epsilon(1e-9));
}

TEST_CASE("phase congruency rejects a degenerate bank") {
  Tensor img(32, 32, 1, 0.5);
  CHECK_THROWS(log_gabor_bank(0, 4));
  LogGaborBank bad;
  bad.scales = 0;
  CHECK_THROWS(phase_congruency(img, bad, {}));
}
