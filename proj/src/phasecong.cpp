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

#include "pmet/phasecong.hpp"

#include <cmath>

namespace pmet::signal {

using namespace pmet::ad;

LogGaborBank log_gabor_bank(int scales, int orientations) {
  if (scales < 1 || orientations < 1)
    throw std::invalid_argument("log_gabor_bank: degenerate bank");
  LogGaborBank b;
  b.scales = scales;
  b.orientations = orientations;
  return b;
}

LogGaborBank::Masks LogGaborBank::materialize(int h, int w) const {
  if (scales < 1 || orientations < 1)
    throw std::invalid_argument("log_gabor_bank: degenerate bank");
  Masks m;
  // Frequency grid (unshifted), radius in cycles/sample.
  Tensor radius(h, w, 1), theta(h, w, 1);
  for (int y = 0; y < h; ++y) {
    int fy = y <= (h - 1) / 2 ? y : y - h;
    double vy = static_cast<double>(fy) / h;
    for (int x = 0; x < w; ++x) {
      int fx = x <= (w - 1) / 2 ? x : x - w;
      double vx = static_cast<double>(fx) / w;
      radius.at(0, y, x) = std::sqrt(vx * vx + vy * vy);
      theta.at(0, y, x) = std::atan2(-vy, vx);
    }
  }
  radius.at(0, 0, 0) = 1.0;  // avoids log(0); the DC gain is zeroed below

  // Butterworth guard against the Nyquist edge.
  m.lowpass = Tensor(h, w, 1);
  for (size_t i = 0; i < m.lowpass.size(); ++i) {
    double r = radius.data()[i] / 0.45;
    m.lowpass.data()[i] = 1.0 / (1.0 + std::pow(r, 30.0));
  }

  double log_sigma = std::log(sigma_on_f);
  for (int s = 0; s < scales; ++s) {
    double wavelength = min_wavelength * std::pow(mult, s);
    double f0 = 1.0 / wavelength;
    Tensor rad(h, w, 1);
    for (size_t i = 0; i < rad.size(); ++i) {
      double lr = std::log(radius.data()[i] / f0);
      rad.data()[i] = std::exp(-(lr * lr) / (2.0 * log_sigma * log_sigma)) *
                      m.lowpass.data()[i];
    }
    rad.at(0, 0, 0) = 0.0;
    m.radial.push_back(std::move(rad));
  }

  double theta_sigma = M_PI / orientations / d_theta_on_sigma;
  for (int o = 0; o < orientations; ++o) {
    double angle = o * M_PI / orientations;
    Tensor ang(h, w, 1);
    for (size_t i = 0; i < ang.size(); ++i) {
      double st = std::sin(theta.data()[i]), ct = std::cos(theta.data()[i]);
      double ds = st * std::cos(angle) - ct * std::sin(angle);
      double dc = ct * std::cos(angle) + st * std::sin(angle);
      double dt = std::abs(std::atan2(ds, dc));
      ang.data()[i] = std::exp(-(dt * dt) / (2.0 * theta_sigma * theta_sigma));
    }
    m.angular.push_back(std::move(ang));
  }
  return m;
}

std::vector<std::vector<CVar>> log_gabor_responses(const Var& img,
                                                   const LogGaborBank& bank) {
  if (img.channels() != 1)
    throw std::invalid_argument("log_gabor_responses: grayscale input required");
  LogGaborBank::Masks masks = bank.materialize(img.height(), img.width());
  CVar spec = fft2(img);
  Tensor zero(img.height(), img.width(), 1);
  std::vector<std::vector<CVar>> out(bank.scales);
  for (int s = 0; s < bank.scales; ++s)
    for (int o = 0; o < bank.orientations; ++o) {
      Tensor m = masks.radial[s];
      for (size_t i = 0; i < m.size(); ++i) m.data()[i] *= masks.angular[o].data()[i];
      out[s].push_back(ifft2c(cmul_mask(spec, m, zero)));
    }
  return out;
}

Var phase_congruency(const Var& img, const LogGaborBank& bank,
                     const PhaseCongParams& p) {
  auto resp = log_gabor_responses(img, bank);
  int ns = bank.scales, no = bank.orientations;
  double eps = p.epsilon;

  Var energy_all, an_all;
  for (int o = 0; o < no; ++o) {
    Var sum_e, sum_o, sum_an, max_an;
    std::vector<Var> an(ns);
    for (int s = 0; s < ns; ++s) {
      an[s] = cabs(resp[s][o], 1e-24);
      sum_e = s == 0 ? resp[s][o].re : add(sum_e, resp[s][o].re);
      sum_o = s == 0 ? resp[s][o].im : add(sum_o, resp[s][o].im);
      sum_an = s == 0 ? an[s] : add(sum_an, an[s]);
      max_an = s == 0 ? an[s] : maximum(max_an, an[s]);
    }
    Var xenergy = adds(sqrt_(adds(add(square(sum_e), square(sum_o)), 1e-24)), eps);
    Var mean_e = div(sum_e, xenergy);
    Var mean_o = div(sum_o, xenergy);
    // Energy = sum_s e.E + o.O - |e.O - o.E| (phase deviation measure).
    Var energy;
    for (int s = 0; s < ns; ++s) {
      Var along = add(mul(resp[s][o].re, mean_e), mul(resp[s][o].im, mean_o));
      Var across = abs_(sub(mul(resp[s][o].re, mean_o), mul(resp[s][o].im, mean_e)));
      Var term = sub(along, across);
      energy = s == 0 ? term : add(energy, term);
    }
    // Rayleigh-model noise threshold from the finest-scale response.
    Var tau = muls(median_all(an[0]), 1.0 / std::sqrt(std::log(4.0)));
    double scale_sum = (1.0 - std::pow(1.0 / bank.mult, ns)) / (1.0 - 1.0 / bank.mult);
    Var total_tau = muls(tau, scale_sum);
    Var noise_mean = muls(total_tau, std::sqrt(M_PI / 2.0));
    Var noise_sigma = muls(total_tau, std::sqrt((4.0 - M_PI) / 2.0));
    Var threshold = add(noise_mean, muls(noise_sigma, p.k_noise));
    // Scalar threshold broadcast against the energy map.
    energy = clamp_min(sub(energy, threshold), 0.0);

    // Down-weight narrow frequency spread.
    Var width = muls(adds(div(sum_an, adds(max_an, eps)), -1.0), 1.0 / (ns - 1));
    Var weight = div(Var::scalar(1.0),
                     adds(exp_(muls(adds(neg(width), p.cut_off), p.g_gain)), 1.0));
    energy = mul(weight, energy);

    energy_all = o == 0 ? energy : add(energy_all, energy);
    an_all = o == 0 ? sum_an : add(an_all, sum_an);
  }
  return div(energy_all, adds(an_all, eps));
}

Tensor phase_congruency(const Tensor& img, const LogGaborBank& bank,
                        const PhaseCongParams& p) {
  return phase_congruency(Var::constant(img), bank, p).val();
}

}  // namespace pmet::signal
