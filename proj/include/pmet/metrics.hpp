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

#ifndef PMET_METRICS_HPP_
#define PMET_METRICS_HPP_

#include <string>
#include <vector>

#include "pmet/ad.hpp"
#include "pmet/backbone.hpp"
#include "pmet/tensor.hpp"

namespace pmet::metrics {

enum class Polarity { kLowerBetter, kHigherBetter };
enum class ColorPolicy { kNativeColor, kPerChannelAverage };

struct MetricDescriptor {
  std::string id;
  Polarity polarity = Polarity::kLowerBetter;
  double range_lo = 0.0;
  double range_hi = 1.0;
  int min_size = 1;       // minimum of height and width
  int size_multiple = 1;  // both dimensions must be divisible by this
  ColorPolicy color_policy = ColorPolicy::kNativeColor;
  bool needs_backbone = false;
};

struct MetricScore {
  std::string metric_id;
  double value = 0.0;  // polarity-native
  double loss = 0.0;   // lower = better predicted quality
};

struct EvalContext {
  const backbone::BackboneWeights* backbone = nullptr;
};

const std::vector<MetricDescriptor>& list_metrics();
bool has_metric(const std::string& id);
const MetricDescriptor& descriptor(const std::string& id);  // throws on unknown

// Polarity-native value as a graph over prepared inputs. Applies the metric's
// color policy; inputs must already satisfy the descriptor's size contract.
ad::Var value_graph(const std::string& id, const ad::Var& ref, const ad::Var& dist,
                    const EvalContext& ctx);
// loss = value for lower-better metrics, -value for higher-better ones.
ad::Var loss_graph(const std::string& id, const ad::Var& ref, const ad::Var& dist,
                   const EvalContext& ctx);

// Validates inputs (shape equality, finiteness, min size, divisibility) and
// evaluates the metric.
MetricScore evaluate(const std::string& id, const Tensor& ref, const Tensor& dist,
                     const EvalContext& ctx = {});

// Optimal loss at dist == ref (0 for distances, -optimum for similarities).
double identity_loss(const std::string& id);

void validate_pair(const std::string& id, const Tensor& ref, const Tensor& dist);

}  // namespace pmet::metrics

#endif  // PMET_METRICS_HPP_
