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

#ifndef PMET_EVALRANK_HPP_
#define PMET_EVALRANK_HPP_

#include <string>
#include <vector>

#include "pmet/metrics.hpp"
#include "pmet/tensor.hpp"

namespace pmet::evalrank {

// Pairwise preference counts: w[i][j] = times label i beat label j.
struct PairwiseCounts {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> w;
  std::string stimulus_id;
  void validate() const;  // square, zero diagonal, finite non-negative
};

struct BTResult {
  std::vector<double> mu;  // mean-zero gauge
  double nll = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Maximum-likelihood Bradley-Terry scores by gradient descent with Armijo
// backtracking; requires a connected comparison graph.
BTResult bt_fit(const PairwiseCounts& counts, double tol = 1e-9,
                int max_iters = 10000);

// Negative log-likelihood of counts under scores mu (scale fixed to 1).
double bt_nll(const PairwiseCounts& counts, const std::vector<double>& mu);

// Mean mu per label across stimuli, sorted descending (best first).
std::vector<std::pair<std::string, double>> rank_aggregate(
    const std::vector<std::string>& labels, const std::vector<BTResult>& fits);

// Two-sided paired t-test p-value (Student distribution via the regularized
// incomplete beta). Identical samples give p = 1.
double paired_t_pvalue(const std::vector<double>& a, const std::vector<double>& b);

// Groups of statistically indistinguishable labels: labels sorted by mean
// score descending, adjacent pairs merged while the paired test fails to
// reject at level alpha. Returns groups of indices into `labels`.
std::vector<std::vector<int>> significance_groups(
    const std::vector<std::vector<double>>& samples_per_label, double alpha = 0.05);

// Spearman rank correlation with mid-rank ties; throws on constant input.
double srcc(const std::vector<double>& a, const std::vector<double>& b);

// Mid-ranks (1-based, ties averaged).
std::vector<double> midranks(const std::vector<double>& v);

struct AfcVote {
  double p = 0.0;  // human vote fraction
  int q = 0;       // model vote, 0 or 1
};
double two_afc_score(const std::vector<AfcVote>& votes);

// Rank matrix of the optimization-validity criterion: outputs[j][k] is the
// image produced under training metric j for reference k. Entry (i, j) is the
// rank (1 = best, mid-rank ties) of training metric j under evaluation metric
// i, after averaging per-image ranks over the references.
std::vector<std::vector<double>> cross_rank_matrix(
    const std::vector<std::vector<Tensor>>& outputs, const std::vector<Tensor>& refs,
    const std::vector<std::string>& metric_ids, const metrics::EvalContext& ctx = {});

struct MosRecord {
  std::string ref_path, dist_path;
  double mos = 0.0;
};
struct MosManifest {
  std::string source;
  std::vector<MosRecord> records;
};

// CSV with header ref,dist,mos; paths must resolve at load time.
MosManifest load_mos_manifest(const std::string& path);

// SRCC between the metric's polarity-adjusted prediction (-loss) and MOS.
double srcc_vs_mos(const MosManifest& manifest, const std::string& metric_id,
                   const metrics::EvalContext& ctx = {}, int jobs = 1);

}  // namespace pmet::evalrank

#endif  // PMET_EVALRANK_HPP_
