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

#ifndef PMET_PHASECONG_HPP_
#define PMET_PHASECONG_HPP_

#include <vector>

#include "pmet/ad.hpp"
#include "pmet/tensor.hpp"

namespace pmet::signal {

// Log-Gabor filter bank described by its parameters; frequency-domain masks
// are materialized per image size. Filter (s,o) = radial[s] * angular[o].
struct LogGaborBank {
  int scales = 4;
  int orientations = 4;
  double min_wavelength = 6.0;
  double mult = 2.0;
  double sigma_on_f = 0.55;       // bandwidth: exp(-(log(r/f0))^2 / (2 log(s)^2))
  double d_theta_on_sigma = 1.2;  // angular spread: sigma_theta = pi/norient/this

  struct Masks {
    std::vector<Tensor> radial;   // per scale, h x w
    std::vector<Tensor> angular;  // per orientation, h x w
    Tensor lowpass;               // raised-cosine guard against the Nyquist edge
  };
  Masks materialize(int h, int w) const;
};

LogGaborBank log_gabor_bank(int scales, int orientations);

// Complex responses of the bank: responses[s][o] for a single-channel input.
std::vector<std::vector<ad::CVar>> log_gabor_responses(const ad::Var& img,
                                                       const LogGaborBank& bank);

struct PhaseCongParams {
  double k_noise = 2.0;   // noise threshold in estimated-noise sigmas
  double cut_off = 0.5;   // frequency-spread sigmoid midpoint
  double g_gain = 10.0;   // frequency-spread sigmoid gain
  double epsilon = 1e-4;  // stabilizer
};

// Phase congruency map in [0,1] (grayscale input).
ad::Var phase_congruency(const ad::Var& img, const LogGaborBank& bank,
                         const PhaseCongParams& p);
Tensor phase_congruency(const Tensor& img, const LogGaborBank& bank,
                        const PhaseCongParams& p);

}  // namespace pmet::signal

#endif  // PMET_PHASECONG_HPP_
