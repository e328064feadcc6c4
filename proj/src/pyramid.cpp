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

#include "pmet/pyramid.hpp"

#include <cmath>

namespace pmet::signal {

using namespace pmet::ad;

namespace {

const std::vector<double> kBinomial5 = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};

Var blur5(const Var& x) {
  return sep_filter_same(x, kBinomial5, kBinomial5, Boundary::kMirror);
}

// Zero-stuff to (h, w) at even coordinates, then interpolate with the doubled
// binomial filter. Exact partner of blur + decimate for Laplacian rebuild.
Var upsample2(const Var& x, int h, int w) {
  // Mirror-pad the coarse level before zero-stuffing so boundary
  // interpolation sees reflected *signal* samples on the correct lattice
  // parity, then interpolate with the doubled binomial and crop.
  Var xp = pad(x, 1, 1, 1, 1, Boundary::kMirror);
  Var nn = upsample_nearest(xp, 2);
  Tensor mask(nn.height(), nn.width(), 1);
  for (int y = 0; y < mask.height(); y += 2)
    for (int x2 = 0; x2 < mask.width(); x2 += 2) mask.at(0, y, x2) = 1.0;
  Var sparse = real_mul_mask(nn, mask);
  // Doubled binomial: unity gain over the half-density lattice per axis.
  std::vector<double> k2 = {1 / 8.0, 4 / 8.0, 6 / 8.0, 4 / 8.0, 1 / 8.0};
  Var smooth = sep_filter_same(sparse, k2, k2, Boundary::kZero);
  return crop(smooth, 2, 2, h, w);
}

}  // namespace

std::vector<Var> gaussian_pyramid(const Var& img, int n_levels) {
  if (n_levels < 1) throw std::invalid_argument("gaussian_pyramid: need n_levels >= 1");
  int min_dim = std::min(img.height(), img.width());
  if (min_dim < (1 << (n_levels - 1)))
    throw std::invalid_argument("gaussian_pyramid: image too small for requested levels");
  std::vector<Var> levels{img};
  for (int i = 1; i < n_levels; ++i)
    levels.push_back(decimate(blur5(levels.back()), 2, 2));
  return levels;
}

Pyramid gaussian_pyramid(const Tensor& img, int n_levels) {
  validate_image(img, "gaussian_pyramid");
  Pyramid p;
  p.kind = PyramidKind::kGaussian;
  for (auto& v : gaussian_pyramid(Var::constant(img), n_levels))
    p.levels.push_back(v.val());
  return p;
}

std::vector<Var> laplacian_pyramid(const Var& img, int n_levels) {
  if (n_levels < 1) throw std::invalid_argument("laplacian_pyramid: need n_levels >= 1");
  int min_dim = std::min(img.height(), img.width());
  if (min_dim < (1 << (n_levels - 1)))
    throw std::invalid_argument("laplacian_pyramid: image too small for requested levels");
  std::vector<Var> bands;
  Var cur = img;
  for (int i = 0; i + 1 < n_levels; ++i) {
    Var next = decimate(blur5(cur), 2, 2);
    bands.push_back(sub(cur, upsample2(next, cur.height(), cur.width())));
    cur = next;
  }
  bands.push_back(cur);  // low-pass residual
  return bands;
}

Pyramid laplacian_pyramid(const Tensor& img, int n_levels) {
  validate_image(img, "laplacian_pyramid");
  Pyramid p;
  p.kind = PyramidKind::kLaplacian;
  for (auto& v : laplacian_pyramid(Var::constant(img), n_levels))
    p.levels.push_back(v.val());
  return p;
}

Var collapse_laplacian(const std::vector<Var>& levels) {
  if (levels.empty()) throw std::invalid_argument("collapse_laplacian: empty pyramid");
  Var acc = levels.back();
  for (int i = static_cast<int>(levels.size()) - 2; i >= 0; --i)
    acc = add(levels[i], upsample2(acc, levels[i].height(), levels[i].width()));
  return acc;
}

Tensor collapse_laplacian(const Pyramid& pyr) {
  if (pyr.kind != PyramidKind::kLaplacian)
    throw std::invalid_argument("collapse_laplacian: not a laplacian pyramid");
  std::vector<Var> vs;
  for (const Tensor& t : pyr.levels) vs.push_back(Var::constant(t));
  return collapse_laplacian(vs).val();
}

// ----------------------------------------------------------- steerable

namespace {

// Raised-cosine low-pass with cutoff rc (unit: cycles/sample, Nyquist 0.5):
// 1 below rc/2, 0 above rc, single-octave cosine ramp between.
double rc_low(double r, double rc) {
  if (r <= rc / 2) return 1.0;
  if (r >= rc) return 0.0;
  return std::cos(0.5 * M_PI * std::log2(2.0 * r / rc));
}

double rc_high(double r, double rc) {
  double l = rc_low(r, rc);
  return std::sqrt(std::max(0.0, 1.0 - l * l));
}

struct FreqGrid {
  Tensor r;      // radius, cycles/sample
  Tensor theta;  // angle
};

FreqGrid make_grid(int h, int w) {
  FreqGrid g{Tensor(h, w, 1), Tensor(h, w, 1)};
  for (int y = 0; y < h; ++y) {
    int fy = y <= (h - 1) / 2 ? y : y - h;
    double vy = static_cast<double>(fy) / h;
    for (int x = 0; x < w; ++x) {
      int fx = x <= (w - 1) / 2 ? x : x - w;
      double vx = static_cast<double>(fx) / w;
      g.r.at(0, y, x) = std::sqrt(vx * vx + vy * vy);
      g.theta.at(0, y, x) = std::atan2(vy, vx);
    }
  }
  g.r.at(0, 0, 0) = 1e-12;
  return g;
}

// cos^(K-1) angular window on the analytic half plane.
Tensor angular_mask(const FreqGrid& g, int k_orient, int o) {
  int h = g.r.height(), w = g.r.width();
  Tensor m(h, w, 1);
  double theta0 = M_PI * o / k_orient;
  // Tightness normalization for K orientations.
  double num = 1.0, den = 1.0;
  for (int i = 2; i <= k_orient - 1; ++i) num *= i;              // (K-1)!
  for (int i = 2; i <= 2 * (k_orient - 1); ++i) den *= i;        // (2K-2)!
  double alpha = std::pow(2.0, k_orient - 1) * num / std::sqrt(k_orient * den);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double d = g.theta.at(0, y, x) - theta0;
      while (d > M_PI) d -= 2 * M_PI;
      while (d < -M_PI) d += 2 * M_PI;
      m.at(0, y, x) = std::abs(d) < M_PI / 2
                          ? alpha * std::pow(std::cos(d), k_orient - 1)
                          : 0.0;
    }
  return m;
}

}  // namespace

SteerablePyramidV steerable_complex_pyramid(const Var& img, int scales,
                                            int orientations) {
  if (img.channels() != 1)
    throw std::invalid_argument("steerable_complex_pyramid: grayscale input required");
  if (scales < 1 || orientations < 1)
    throw std::invalid_argument("steerable_complex_pyramid: bad scales/orientations");
  int div = 1 << (scales - 1);
  if (img.height() % div != 0 || img.width() % div != 0)
    throw std::invalid_argument(
        "steerable_complex_pyramid: dimensions must be divisible by 2^(scales-1)");
  if (std::min(img.height(), img.width()) / div < 4)
    throw std::invalid_argument("steerable_complex_pyramid: image too small");

  SteerablePyramidV out;
  out.scales = scales;
  out.orientations = orientations;
  out.bands.resize(scales);

  CVar spec = fft2(img);
  {
    FreqGrid g = make_grid(img.height(), img.width());
    Tensor hi(g.r.height(), g.r.width(), 1);
    Tensor lo(g.r.height(), g.r.width(), 1);
    for (size_t i = 0; i < hi.size(); ++i) {
      hi.data()[i] = rc_high(g.r.data()[i], 0.5);
      lo.data()[i] = rc_low(g.r.data()[i], 0.5);
    }
    Tensor zero(hi.height(), hi.width(), 1);
    out.highpass = ifft2c(cmul_mask(spec, hi, zero)).re;
    spec = cmul_mask(spec, lo, zero);
  }
  for (int s = 0; s < scales; ++s) {
    int h = spec.re.height(), w = spec.re.width();
    FreqGrid g = make_grid(h, w);
    Tensor band(h, w, 1), lo(h, w, 1), zero(h, w, 1);
    for (size_t i = 0; i < band.size(); ++i) {
      band.data()[i] = rc_high(g.r.data()[i], 0.25);
      lo.data()[i] = rc_low(g.r.data()[i], 0.25);
    }
    for (int o = 0; o < orientations; ++o) {
      Tensor mask = angular_mask(g, orientations, o);
      for (size_t i = 0; i < mask.size(); ++i) mask.data()[i] *= band.data()[i];
      // Factor 2 restores the amplitude lost to the analytic half-plane.
      for (size_t i = 0; i < mask.size(); ++i) mask.data()[i] *= 2.0;
      out.bands[s].push_back(ifft2c(cmul_mask(spec, mask, zero)));
    }
    spec = cmul_mask(spec, lo, zero);
    if (s + 1 < scales) spec = spec_crop(spec, h / 2, w / 2);
  }
  out.lowpass = ifft2c(spec).re;
  return out;
}

SteerablePyramid steerable_complex_pyramid(const Tensor& img, int scales,
                                           int orientations) {
  validate_image(img, "steerable_complex_pyramid");
  SteerablePyramidV v = steerable_complex_pyramid(Var::constant(img), scales, orientations);
  SteerablePyramid p;
  p.scales = scales;
  p.orientations = orientations;
  p.bands.resize(scales);
  for (int s = 0; s < scales; ++s)
    for (int o = 0; o < orientations; ++o)
      p.bands[s].push_back({v.bands[s][o].re.val(), v.bands[s][o].im.val()});
  p.highpass = v.highpass.val();
  p.lowpass = v.lowpass.val();
  return p;
}

std::vector<double> SteerablePyramid::band_energy() const {
  std::vector<double> e;
  for (const auto& scale : bands) {
    double s = 0;
    for (const auto& [re, im] : scale)
      for (size_t i = 0; i < re.size(); ++i)
        s += re.data()[i] * re.data()[i] + im.data()[i] * im.data()[i];
    e.push_back(s);
  }
  return e;
}

}  // namespace pmet::signal
