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

#include "pmet/recovery.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "pmet/rng.hpp"
#include "pmet/signal.hpp"

namespace pmet::recovery {

void RecoveryConfig::validate() const {
  if (!metrics::has_metric(metric_id))
    throw std::invalid_argument("recover: unknown metric " + metric_id);
  if (max_iters < 1) throw std::invalid_argument("recover: max_iters must be >= 1");
  if (!(step_size > 0)) throw std::invalid_argument("recover: step_size must be positive");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
    throw std::invalid_argument("recover: moment decays must lie in [0,1)");
  if (log_every < 1) throw std::invalid_argument("recover: log_every must be >= 1");
}

void Degradation::validate() const {
  switch (kind) {
    case DegradationKind::kGaussianNoise:
      if (sigma < 0) throw std::invalid_argument("degrade: sigma must be >= 0");
      break;
    case DegradationKind::kBlur:
      if (kernel.empty() && (blur_size < 1 || blur_size % 2 == 0 || !(blur_sigma > 0)))
        throw std::invalid_argument("degrade: bad blur parameters");
      break;
    case DegradationKind::kDownsampleUpsample:
      if (factor < 1) throw std::invalid_argument("degrade: factor must be >= 1");
      break;
    case DegradationKind::kSoftQuantizeRoundtrip:
      if (centers.size() < 2 || !(quant_scale > 0))
        throw std::invalid_argument("degrade: bad quantizer parameters");
      break;
  }
}

Tensor make_init(InitKind kind, const Tensor& ref, uint64_t seed, double sigma,
                 const Tensor* payload) {
  validate_image(ref, "make_init");
  switch (kind) {
    case InitKind::kWhiteNoise: {
      Rng rng(seed);
      Tensor out(ref.height(), ref.width(), ref.channels());
      for (size_t i = 0; i < out.size(); ++i)
        out.data()[i] = std::clamp(0.5 + sigma * rng.next_gaussian(), 0.0, 1.0);
      return out;
    }
    case InitKind::kDegradedFile:
    case InitKind::kCustom: {
      if (payload == nullptr || payload->empty())
        throw std::invalid_argument("make_init: missing init image");
      if (!payload->same_shape(ref))
        throw std::invalid_argument("make_init: init shape must match the reference");
      return *payload;
    }
  }
  throw std::invalid_argument("make_init: unknown kind");
}

Tensor degrade(const Tensor& ref, const Degradation& d, uint64_t seed) {
  validate_image(ref, "degrade");
  d.validate();
  Tensor out;
  switch (d.kind) {
    case DegradationKind::kGaussianNoise: {
      Rng rng(seed);
      out = ref;
      for (size_t i = 0; i < out.size(); ++i)
        out.data()[i] += d.sigma * rng.next_gaussian();
      break;
    }
    case DegradationKind::kBlur: {
      signal::Kernel k = d.kernel.empty()
                             ? signal::gaussian_kernel(d.blur_size, d.blur_sigma)
                             : signal::Kernel::centered(d.kernel);
      out = signal::convolve(ref, k, signal::Boundary::kMirror);
      break;
    }
    case DegradationKind::kDownsampleUpsample: {
      Tensor low = signal::resample(ref, 1.0 / d.factor, signal::ResampleMethod::kBicubic);
      // Back to the exact original size with nearest-neighbor interpolation.
      ad::Var v = ad::Var::constant(low);
      v = ad::resample_rows(v, ad::make_table_nearest(low.height(), ref.height()));
      v = ad::resample_cols(v, ad::make_table_nearest(low.width(), ref.width()));
      out = v.val();
      break;
    }
    case DegradationKind::kSoftQuantizeRoundtrip: {
      // Pixels map to [-1,1], pass through the soft quantizer, and map back.
      Tensor z = ref;
      for (size_t i = 0; i < z.size(); ++i) z.data()[i] = 2.0 * z.data()[i] - 1.0;
      Tensor q = signal::soft_quantize(z, d.centers, d.quant_scale);
      out = q;
      for (size_t i = 0; i < out.size(); ++i) out.data()[i] = 0.5 * (out.data()[i] + 1.0);
      break;
    }
  }
  for (size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::clamp(out.data()[i], 0.0, 1.0);
  return out;
}

RecoveryResult recover(const Tensor& ref, const RecoveryConfig& cfg,
                       const metrics::EvalContext& ctx) {
  cfg.validate();
  metrics::validate_pair(cfg.metric_id, ref, ref);

  Tensor x = make_init(cfg.init_kind, ref, cfg.seed, cfg.init_sigma,
                       cfg.init_image.empty() ? nullptr : &cfg.init_image);

  auto loss_value = [&](const Tensor& img) {
    return metrics::loss_graph(cfg.metric_id, ad::Var::constant(ref),
                               ad::Var::constant(img), ctx)
        .item();
  };

  RecoveryResult res;
  double loss = loss_value(x);
  auto log_point = [&](int iter, double l, const Tensor& img) {
    res.logged_iters.push_back(iter);
    res.loss_trajectory.push_back(l);
    res.psnr_trajectory.push_back(signal::psnr(ref, img));
  };

  if (!std::isfinite(loss)) {
    res.final_image = x;
    res.diverged = true;
    res.final_loss = loss;
    res.final_psnr = signal::psnr(ref, x);
    return res;
  }
  log_point(0, loss, x);

  // Already at the optimum (e.g. init == ref): zero-iteration exit.
  if (std::abs(loss - metrics::identity_loss(cfg.metric_id)) <= 1e-6) {
    res.final_image = x;
    res.iterations_run = 0;
    res.final_loss = loss;
    res.final_psnr = signal::psnr(ref, x);
    res.recovered = res.final_psnr >= cfg.psnr_threshold;
    return res;
  }

  Tensor m(x.height(), x.width(), x.channels());
  Tensor v(x.height(), x.width(), x.channels());
  int iter = 0;
  for (iter = 1; iter <= cfg.max_iters; ++iter) {
    ad::Var leaf = ad::Var::leaf(x);
    ad::Var lg = metrics::loss_graph(cfg.metric_id, ad::Var::constant(ref), leaf, ctx);
    double cur = lg.item();
    if (!std::isfinite(cur)) {
      res.diverged = true;
      break;
    }
    ad::backward(lg);
    Tensor g = leaf.grad();

    double bc1 = 1.0 - std::pow(cfg.beta1, iter);
    double bc2 = 1.0 - std::pow(cfg.beta2, iter);
    for (size_t i = 0; i < g.size(); ++i) {
      m.data()[i] = cfg.beta1 * m.data()[i] + (1 - cfg.beta1) * g.data()[i];
      v.data()[i] = cfg.beta2 * v.data()[i] + (1 - cfg.beta2) * g.data()[i] * g.data()[i];
    }

    double alpha = cfg.step_size;
    Tensor candidate;
    double cand_loss = 0;
    bool accepted = false;
    for (int backoff = 0; backoff <= 5; ++backoff) {
      candidate = x;
      for (size_t i = 0; i < x.size(); ++i) {
        double mhat = m.data()[i] / bc1;
        double vhat = v.data()[i] / bc2;
        candidate.data()[i] = std::clamp(
            x.data()[i] - alpha * mhat / (std::sqrt(vhat) + 1e-8), 0.0, 1.0);
      }
      cand_loss = loss_value(candidate);
      if (std::isfinite(cand_loss) && cand_loss <= cur + 1e-6) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    double prev = loss;
    if (accepted) {
      x = candidate;
      loss = cand_loss;
    } else {
      loss = cur;
    }
    if (iter % cfg.log_every == 0) log_point(iter, loss, x);
    if (cfg.stop_tol > 0 && accepted && std::abs(prev - loss) < cfg.stop_tol) break;
  }
  res.iterations_run = std::min(iter, cfg.max_iters);
  if (res.logged_iters.empty() || res.logged_iters.back() != res.iterations_run)
    log_point(res.iterations_run, loss, x);
  res.final_image = x;
  res.final_loss = loss;
  res.final_psnr = signal::psnr(ref, x);
  res.recovered = !res.diverged && res.final_psnr >= cfg.psnr_threshold;
  return res;
}

std::vector<ScreenRow> recoverability_screen(
    const std::vector<std::string>& metric_ids,
    const std::vector<std::pair<std::string, Tensor>>& refs,
    const RecoveryConfig& base, const metrics::EvalContext& ctx, int jobs) {
  std::vector<ScreenRow> rows(metric_ids.size() * refs.size());
  if (rows.empty()) return rows;
  jobs = std::max(1, jobs);

  const char* init_name = base.init_kind == InitKind::kWhiteNoise ? "white-noise"
                          : base.init_kind == InitKind::kDegradedFile ? "degraded-file"
                                                                      : "custom";
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t idx = next.fetch_add(1);
      if (idx >= rows.size()) return;
      size_t mi = idx / refs.size(), ri = idx % refs.size();
      ScreenRow& row = rows[idx];
      row.metric_id = metric_ids[mi];
      row.image_id = refs[ri].first;
      row.init = init_name;
      try {
        RecoveryConfig cfg = base;
        cfg.metric_id = metric_ids[mi];
        // Independent, reproducible stream per grid cell.
        cfg.seed = Rng(base.seed).fork(idx).next_u64();
        RecoveryResult r = recover(refs[ri].second, cfg, ctx);
        row.final_loss = r.final_loss;
        row.final_psnr = r.final_psnr;
        row.recovered = r.recovered;
        row.failed = r.diverged;
        row.final_image = r.final_image;
        if (r.diverged) row.error = "diverged";
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

}  // namespace pmet::recovery
