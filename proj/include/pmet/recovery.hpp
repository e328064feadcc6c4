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

#ifndef PMET_RECOVERY_HPP_
#define PMET_RECOVERY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "pmet/metrics.hpp"
#include "pmet/tensor.hpp"

namespace pmet::recovery {

enum class InitKind { kWhiteNoise, kDegradedFile, kCustom };

struct RecoveryConfig {
  std::string metric_id;
  InitKind init_kind = InitKind::kWhiteNoise;
  uint64_t seed = 0;
  int max_iters = 2000;
  double step_size = 0.01;
  double beta1 = 0.9;          // first-moment decay
  double beta2 = 0.999;        // second-moment decay
  double stop_tol = 0.0;       // stop when |loss change| < tol on accepted steps
  int log_every = 10;
  double init_sigma = 0.2;     // white-noise init std around mid-gray
  double psnr_threshold = 40.0;
  Tensor init_image;           // kCustom / kDegradedFile payload

  void validate() const;
};

struct RecoveryResult {
  Tensor final_image;
  std::vector<int> logged_iters;
  std::vector<double> loss_trajectory;
  std::vector<double> psnr_trajectory;  // dB vs reference
  int iterations_run = 0;
  bool recovered = false;  // final PSNR above threshold
  bool diverged = false;   // non-finite loss encountered; reported, not thrown
  double final_loss = 0.0;
  double final_psnr = 0.0;
};

enum class DegradationKind {
  kGaussianNoise,
  kBlur,
  kDownsampleUpsample,
  kSoftQuantizeRoundtrip
};

struct Degradation {
  DegradationKind kind = DegradationKind::kGaussianNoise;
  double sigma = 50.0 / 255.0;  // gaussian noise std on the [0,1] scale
  int blur_size = 9;            // gaussian blur kernel
  double blur_sigma = 2.0;
  Tensor kernel;                // optional custom blur taps (overrides above)
  int factor = 4;               // downsample-upsample
  std::vector<double> centers = {-1.0, 1.0};  // soft quantizer on [-1,1]
  double quant_scale = 1.0;

  void validate() const;
};

// Seed-deterministic initialization. White noise draws mid-gray + sigma
// gaussians clipped to [0,1]; custom/degraded-file kinds return the payload.
Tensor make_init(InitKind kind, const Tensor& ref, uint64_t seed, double sigma,
                 const Tensor* payload);

// Applies a degradation; output shape equals the input shape and samples are
// clipped to [0,1]. Deterministic per seed.
Tensor degrade(const Tensor& ref, const Degradation& d, uint64_t seed);

// Minimizes the metric loss over the image by projected adaptive-moment
// descent with step backoff: a proposed step whose loss exceeds the current
// loss by more than 1e-6 is retried at half the step, up to five times, and
// skipped if still increasing, so accepted losses are non-increasing within
// the slack.
RecoveryResult recover(const Tensor& ref, const RecoveryConfig& cfg,
                       const metrics::EvalContext& ctx = {});

struct ScreenRow {
  std::string metric_id;
  std::string image_id;
  std::string init;
  double final_loss = 0.0;
  double final_psnr = 0.0;
  bool recovered = false;
  bool failed = false;  // divergence or per-run error, reported in-band
  std::string error;
  Tensor final_image;
};

// One recover run per (metric, image); rows ordered by (metric, image)
// independent of the worker count.
std::vector<ScreenRow> recoverability_screen(
    const std::vector<std::string>& metric_ids,
    const std::vector<std::pair<std::string, Tensor>>& refs,
    const RecoveryConfig& base, const metrics::EvalContext& ctx, int jobs = 1);

}  // namespace pmet::recovery

#endif  // PMET_RECOVERY_HPP_
