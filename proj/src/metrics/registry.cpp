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

#include <functional>
#include <limits>
#include <map>

#include "common.hpp"
#include "pmet/metrics.hpp"

namespace pmet::metrics {

namespace {

using internal::Var;
using ValueFn =
    std::function<Var(const Var&, const Var&, const EvalContext&)>;

struct MetricEntry {
  MetricDescriptor desc;
  ValueFn value;  // operates on the policy-prepared input pair
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// Averages a grayscale-native builder over the input channels.
ValueFn per_channel(std::function<Var(const Var&, const Var&)> fn) {
  return [fn](const Var& ref, const Var& dist, const EvalContext&) {
    int c = ref.channels();
    if (c == 1) return fn(ref, dist);
    Var acc;
    for (int i = 0; i < c; ++i) {
      Var v = fn(ad::slice_channel(ref, i), ad::slice_channel(dist, i));
      acc = i == 0 ? v : ad::add(acc, v);
    }
    return ad::muls(acc, 1.0 / c);
  };
}

const std::vector<MetricEntry>& registry() {
  static const std::vector<MetricEntry> kEntries = [] {
    std::vector<MetricEntry> e;
    e.push_back({{"mae", Polarity::kLowerBetter, 0, 1, 1, 1,
                  ColorPolicy::kNativeColor, false},
                 [](const Var& r, const Var& d, const EvalContext&) {
                   return internal::mae_value(r, d);
                 }});
    e.push_back({{"ms-ssim", Polarity::kHigherBetter, -1, 1, 128, 1,
                  ColorPolicy::kPerChannelAverage, false},
                 per_channel([](const Var& r, const Var& d) {
                   return internal::ms_ssim_value(r, d, 5);
                 })});
    e.push_back({{"vif", Polarity::kHigherBetter, 0, kInf, 128, 8,
                  ColorPolicy::kPerChannelAverage, false},
                 per_channel(internal::vif_value)});
    e.push_back({{"cw-ssim", Polarity::kHigherBetter, 0, 1, 128, 8,
                  ColorPolicy::kPerChannelAverage, false},
                 per_channel(internal::cw_ssim_value)});
    e.push_back({{"mad", Polarity::kLowerBetter, 0, kInf, 64, 1,
                  ColorPolicy::kPerChannelAverage, false},
                 per_channel(internal::mad_value)});
    e.push_back({{"fsim", Polarity::kHigherBetter, 0, 1, 64, 1,
                  ColorPolicy::kNativeColor, false},
                 [](const Var& r, const Var& d, const EvalContext&) {
                   return internal::fsim_value(r, d);
                 }});
    e.push_back({{"gmsd", Polarity::kLowerBetter, 0, 1, 16, 1,
                  ColorPolicy::kPerChannelAverage, false},
                 per_channel(internal::gmsd_value)});
    e.push_back({{"vsi", Polarity::kHigherBetter, 0, 1, 48, 1,
                  ColorPolicy::kNativeColor, false},
                 [](const Var& r, const Var& d, const EvalContext&) {
                   return internal::vsi_value(r, d);
                 }});
    e.push_back({{"nlpd", Polarity::kLowerBetter, 0, kInf, 64, 1,
                  ColorPolicy::kPerChannelAverage, false},
                 per_channel(internal::nlpd_value)});
    e.push_back({{"lpips", Polarity::kLowerBetter, 0, kInf, 32, 1,
                  ColorPolicy::kNativeColor, true},
                 [](const Var& r, const Var& d, const EvalContext& ctx) {
                   return internal::lpips_value(r, d, *ctx.backbone);
                 }});
    e.push_back({{"dists", Polarity::kLowerBetter, 0, 1, 32, 1,
                  ColorPolicy::kNativeColor, true},
                 [](const Var& r, const Var& d, const EvalContext& ctx) {
                   return internal::dists_value(r, d, *ctx.backbone);
                 }});
    return e;
  }();
  return kEntries;
}

const MetricEntry& entry(const std::string& id) {
  for (const MetricEntry& e : registry())
    if (e.desc.id == id) return e;
  throw std::invalid_argument("unknown metric: " + id);
}

}  // namespace

const std::vector<MetricDescriptor>& list_metrics() {
  static const std::vector<MetricDescriptor> kDescs = [] {
    std::vector<MetricDescriptor> d;
    for (const MetricEntry& e : registry()) d.push_back(e.desc);
    return d;
  }();
  return kDescs;
}

bool has_metric(const std::string& id) {
  for (const MetricEntry& e : registry())
    if (e.desc.id == id) return true;
  return false;
}

const MetricDescriptor& descriptor(const std::string& id) { return entry(id).desc; }

ad::Var value_graph(const std::string& id, const ad::Var& ref, const ad::Var& dist,
                    const EvalContext& ctx) {
  const MetricEntry& e = entry(id);
  if (e.desc.needs_backbone && ctx.backbone == nullptr)
    throw std::invalid_argument(id + ": backbone weights required");
  return e.value(ref, dist, ctx);
}

ad::Var loss_graph(const std::string& id, const ad::Var& ref, const ad::Var& dist,
                   const EvalContext& ctx) {
  ad::Var v = value_graph(id, ref, dist, ctx);
  return descriptor(id).polarity == Polarity::kLowerBetter ? v : ad::neg(v);
}

void validate_pair(const std::string& id, const Tensor& ref, const Tensor& dist) {
  const MetricDescriptor& d = descriptor(id);
  validate_image(ref, id.c_str());
  validate_image(dist, id.c_str());
  if (!ref.same_shape(dist))
    throw std::invalid_argument(id + ": shape mismatch " + ref.shape_str() + " vs " +
                                dist.shape_str());
  if (std::min(ref.height(), ref.width()) < d.min_size)
    throw std::invalid_argument(id + ": image smaller than min_size " +
                                std::to_string(d.min_size));
  if (ref.height() % d.size_multiple != 0 || ref.width() % d.size_multiple != 0)
    throw std::invalid_argument(id + ": dimensions must be divisible by " +
                                std::to_string(d.size_multiple));
}

MetricScore evaluate(const std::string& id, const Tensor& ref, const Tensor& dist,
                     const EvalContext& ctx) {
  validate_pair(id, ref, dist);
  ad::Var v = value_graph(id, ad::Var::constant(ref), ad::Var::constant(dist), ctx);
  MetricScore s;
  s.metric_id = id;
  s.value = v.item();
  s.loss = descriptor(id).polarity == Polarity::kLowerBetter ? s.value : -s.value;
  return s;
}

double identity_loss(const std::string& id) {
  const MetricDescriptor& d = descriptor(id);
  if (d.polarity == Polarity::kLowerBetter) return 0.0;
  // Similarity metrics peak at 1 on identical inputs.
  return -1.0;
}

}  // namespace pmet::metrics
