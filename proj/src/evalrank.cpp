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

#include "pmet/evalrank.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <thread>

#include "pmet/csvio.hpp"
#include "pmet/image_io.hpp"

namespace pmet::evalrank {

namespace {

double log1p_exp(double x) {  // log(1 + e^x), stable
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Regularized incomplete beta via the Lentz continued fraction.
double betacf(double a, double b, double x) {
  const int kMaxIter = 300;
  const double kEps = 3e-14, kFpMin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double incbeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                 a * std::log(x) + b * std::log(1.0 - x);
  double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

void PairwiseCounts::validate() const {
  size_t m = labels.size();
  if (m < 2) throw std::invalid_argument("pairwise counts: need at least 2 labels");
  if (w.size() != m) throw std::invalid_argument("pairwise counts: matrix size mismatch");
  double total = 0;
  for (size_t i = 0; i < m; ++i) {
    if (w[i].size() != m)
      throw std::invalid_argument("pairwise counts: matrix size mismatch");
    for (size_t j = 0; j < m; ++j) {
      if (!std::isfinite(w[i][j]) || w[i][j] < 0)
        throw std::invalid_argument("pairwise counts: entries must be finite and >= 0");
      if (i == j && w[i][j] != 0)
        throw std::invalid_argument("pairwise counts: diagonal must be zero");
      total += w[i][j];
    }
  }
  if (total == 0) throw std::invalid_argument("pairwise counts: all-zero counts");
  // Connectivity over the undirected comparison graph.
  std::vector<int> comp(m, -1);
  std::vector<size_t> stack{0};
  comp[0] = 0;
  while (!stack.empty()) {
    size_t i = stack.back();
    stack.pop_back();
    for (size_t j = 0; j < m; ++j)
      if (comp[j] < 0 && (w[i][j] > 0 || w[j][i] > 0)) {
        comp[j] = 0;
        stack.push_back(j);
      }
  }
  for (size_t i = 0; i < m; ++i)
    if (comp[i] < 0)
      throw std::invalid_argument("pairwise counts: comparison graph disconnected");
}

double bt_nll(const PairwiseCounts& counts, const std::vector<double>& mu) {
  size_t m = counts.labels.size();
  double acc = 0;
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < m; ++j) {
      if (i == j || counts.w[i][j] == 0) continue;
      // log(e^mu_i + e^mu_j) - mu_i
      double lse = std::max(mu[i], mu[j]) + log1p_exp(-std::abs(mu[i] - mu[j]));
      acc += counts.w[i][j] * (lse - mu[i]);
    }
  return acc;
}

BTResult bt_fit(const PairwiseCounts& counts, double tol, int max_iters) {
  counts.validate();
  size_t m = counts.labels.size();
  BTResult res;
  res.mu.assign(m, 0.0);
  std::vector<double> grad(m), cand(m);
  double f = bt_nll(counts, res.mu);
  int it = 0;
  for (it = 0; it < max_iters; ++it) {
    double gmax = 0, gnorm2 = 0;
    for (size_t a = 0; a < m; ++a) {
      double g = 0;
      for (size_t j = 0; j < m; ++j) {
        if (j == a) continue;
        double nab = counts.w[a][j] + counts.w[j][a];
        if (nab > 0) g += nab * sigmoid(res.mu[a] - res.mu[j]);
        g -= counts.w[a][j];
      }
      grad[a] = g;
      gmax = std::max(gmax, std::abs(g));
      gnorm2 += g * g;
    }
    if (gmax < tol) {
      res.converged = true;
      break;
    }
    // Backtracking line search on the gradient direction.
    double t = 1.0;
    bool stepped = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (size_t a = 0; a < m; ++a) cand[a] = res.mu[a] - t * grad[a];
      double mean = std::accumulate(cand.begin(), cand.end(), 0.0) / m;
      for (size_t a = 0; a < m; ++a) cand[a] -= mean;
      double fc = bt_nll(counts, cand);
      if (fc <= f - 0.5 * t * gnorm2 * 1e-4) {
        res.mu = cand;
        f = fc;
        stepped = true;
        break;
      }
      t *= 0.5;
    }
    if (!stepped) break;  // no further descent possible at double precision
  }
  res.iterations = it;
  res.nll = f;
  return res;
}

std::vector<std::pair<std::string, double>> rank_aggregate(
    const std::vector<std::string>& labels, const std::vector<BTResult>& fits) {
  if (fits.empty()) return {};
  for (const BTResult& f : fits)
    if (f.mu.size() != labels.size())
      throw std::invalid_argument("rank_aggregate: label set mismatch");
  std::vector<std::pair<std::string, double>> out;
  for (size_t i = 0; i < labels.size(); ++i) {
    double mean = 0;
    for (const BTResult& f : fits) mean += f.mu[i];
    out.push_back({labels[i], mean / fits.size()});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

double paired_t_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("paired_t_pvalue: need equal sample counts >= 2");
  size_t n = a.size();
  double mean = 0;
  for (size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double var = 0;
  for (size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  if (var == 0) return mean == 0 ? 1.0 : 0.0;
  double t = mean / std::sqrt(var / static_cast<double>(n));
  double nu = static_cast<double>(n - 1);
  double x = nu / (nu + t * t);
  return incbeta(nu / 2.0, 0.5, x);
}

std::vector<std::vector<int>> significance_groups(
    const std::vector<std::vector<double>>& samples_per_label, double alpha) {
  size_t m = samples_per_label.size();
  if (m == 0) return {};
  size_t n = samples_per_label[0].size();
  if (n < 2) throw std::invalid_argument("significance_groups: fewer than 2 samples");
  for (const auto& s : samples_per_label)
    if (s.size() != n)
      throw std::invalid_argument("significance_groups: unequal sample counts");

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    double mi = std::accumulate(samples_per_label[i].begin(),
                                samples_per_label[i].end(), 0.0);
    double mj = std::accumulate(samples_per_label[j].begin(),
                                samples_per_label[j].end(), 0.0);
    return mi > mj;
  });

  std::vector<std::vector<int>> groups{{order[0]}};
  for (size_t k = 1; k < m; ++k) {
    double p = paired_t_pvalue(samples_per_label[order[k - 1]],
                               samples_per_label[order[k]]);
    if (p >= alpha)
      groups.back().push_back(order[k]);  // indistinguishable from the neighbor
    else
      groups.push_back({order[k]});
  }
  return groups;
}

std::vector<double> midranks(const std::vector<double>& v) {
  size_t n = v.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&v](size_t i, size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double srcc(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("srcc: need equal lengths >= 2");
  auto ra = midranks(a);
  auto rb = midranks(b);
  double ma = 0, mb = 0;
  for (size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= ra.size();
  mb /= rb.size();
  double num = 0, va = 0, vb = 0;
  for (size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0 || vb == 0)
    throw std::invalid_argument("srcc: undefined for constant input");
  return num / std::sqrt(va * vb);
}

double two_afc_score(const std::vector<AfcVote>& votes) {
  if (votes.empty()) throw std::invalid_argument("two_afc_score: empty vote list");
  double acc = 0;
  for (const AfcVote& v : votes) {
    if (v.p < 0 || v.p > 1)
      throw std::invalid_argument("two_afc_score: p must lie in [0,1]");
    if (v.q != 0 && v.q != 1)
      throw std::invalid_argument("two_afc_score: q must be 0 or 1");
    acc += v.p * v.q + (1.0 - v.p) * (1 - v.q);
  }
  return acc / static_cast<double>(votes.size());
}

std::vector<std::vector<double>> cross_rank_matrix(
    const std::vector<std::vector<Tensor>>& outputs, const std::vector<Tensor>& refs,
    const std::vector<std::string>& metric_ids, const metrics::EvalContext& ctx) {
  size_t m = metric_ids.size();
  size_t n_img = refs.size();
  if (m == 0) return {};
  if (outputs.size() != m)
    throw std::invalid_argument("cross_rank_matrix: outputs grid incomplete");
  for (const auto& row : outputs) {
    if (row.size() != n_img)
      throw std::invalid_argument("cross_rank_matrix: outputs grid incomplete");
    for (const Tensor& t : row)
      if (t.empty()) throw std::invalid_argument("cross_rank_matrix: missing grid cell");
  }

  std::vector<std::vector<double>> matrix(m, std::vector<double>(m, 0.0));
  for (size_t eval_i = 0; eval_i < m; ++eval_i) {
    std::vector<double> avg_rank(m, 0.0);
    for (size_t k = 0; k < n_img; ++k) {
      std::vector<double> losses(m);
      for (size_t train_j = 0; train_j < m; ++train_j)
        losses[train_j] =
            metrics::evaluate(metric_ids[eval_i], refs[k], outputs[train_j][k], ctx).loss;
      auto ranks = midranks(losses);  // rank 1 = lowest loss = best
      for (size_t train_j = 0; train_j < m; ++train_j) avg_rank[train_j] += ranks[train_j];
    }
    for (double& r : avg_rank) r /= static_cast<double>(n_img);
    matrix[eval_i] = midranks(avg_rank);
  }
  return matrix;
}

MosManifest load_mos_manifest(const std::string& path) {
  csvio::Table t = csvio::read_csv(path);
  int cr = t.column("ref"), cd = t.column("dist"), cm = t.column("mos");
  if (cr < 0 || cd < 0 || cm < 0)
    throw std::runtime_error("mos manifest: header must be ref,dist,mos");
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  MosManifest m;
  m.source = path;
  for (const auto& row : t.rows) {
    MosRecord rec;
    auto resolve = [&base](const std::string& p) {
      std::filesystem::path fp(p);
      if (fp.is_relative()) fp = base / fp;
      return fp.string();
    };
    rec.ref_path = resolve(row[cr]);
    rec.dist_path = resolve(row[cd]);
    try {
      rec.mos = std::stod(row[cm]);
    } catch (...) {
      throw std::runtime_error("mos manifest: malformed mos value '" + row[cm] + "'");
    }
    if (!std::isfinite(rec.mos))
      throw std::runtime_error("mos manifest: non-finite mos value");
    if (!std::filesystem::exists(rec.ref_path) ||
        !std::filesystem::exists(rec.dist_path))
      throw std::runtime_error("mos manifest: unresolvable path in row for " +
                               row[cd]);
    m.records.push_back(std::move(rec));
  }
  return m;
}

double srcc_vs_mos(const MosManifest& manifest, const std::string& metric_id,
                   const metrics::EvalContext& ctx, int jobs) {
  size_t n = manifest.records.size();
  if (n < 2) throw std::invalid_argument("srcc_vs_mos: need at least 2 records");
  std::vector<double> pred(n), mos(n);
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex err_mutex;
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        const MosRecord& r = manifest.records[i];
        Tensor ref = read_image(r.ref_path);
        Tensor dist = read_image(r.dist_path);
        pred[i] = -metrics::evaluate(metric_id, ref, dist, ctx).loss;
        mos[i] = r.mos;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        failed = true;
        error = e.what();
      }
    }
  };
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed) throw std::runtime_error("srcc_vs_mos: " + error);
  return srcc(pred, mos);
}

}  // namespace pmet::evalrank
