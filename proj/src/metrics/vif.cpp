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

#include <Eigen/Dense>

#include "common.hpp"
#include "pmet/pyramid.hpp"

namespace pmet::metrics::internal {

namespace {

constexpr int kScales = 4;
constexpr int kOrients = 6;
constexpr int kM = 3;               // GSM block side
constexpr double kSigmaNsq = 0.4;   // HVS noise variance on the [0,255] scale
constexpr double kTol = 1e-10;

struct RefBandModel {
  Tensor s2;                    // per-block GSM multiplier field (ML estimate)
  std::vector<double> eigvals;  // of the block covariance (floored at 0)
};

// Vector GSM statistics of a reference subband: covariance of mean-removed
// 3x3 block vectors, its eigenvalues, and the per-block multiplier field
// s^2 = v^T C^-1 v / M^2. Reference-side only, so plain (untaped) math.
RefBandModel fit_ref_band(const Tensor& band) {
  int nby = band.height() / kM, nbx = band.width() / kM;
  int dim = kM * kM;
  int nb = nby * nbx;
  Eigen::MatrixXd vecs(dim, nb);
  for (int by = 0; by < nby; ++by)
    for (int bx = 0; bx < nbx; ++bx) {
      int col = by * nbx + bx;
      for (int i = 0; i < kM; ++i)
        for (int j = 0; j < kM; ++j)
          vecs(i * kM + j, col) = band.at(0, by * kM + i, bx * kM + j);
    }
  Eigen::VectorXd mean = vecs.rowwise().mean();
  vecs.colwise() -= mean;
  Eigen::MatrixXd cov = (vecs * vecs.transpose()) / static_cast<double>(nb);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  RefBandModel m;
  m.eigvals.resize(dim);
  for (int i = 0; i < dim; ++i) m.eigvals[i] = std::max(0.0, es.eigenvalues()[i]);

  double floor = std::max(cov.trace() / dim * 1e-8, 1e-15);
  Eigen::VectorXd inv_l(dim);
  for (int i = 0; i < dim; ++i) inv_l[i] = 1.0 / std::max(es.eigenvalues()[i], floor);
  Eigen::MatrixXd cinv =
      es.eigenvectors() * inv_l.asDiagonal() * es.eigenvectors().transpose();

  m.s2 = Tensor(nby, nbx, 1);
  for (int col = 0; col < nb; ++col) {
    double q = vecs.col(col).dot(cinv * vecs.col(col)) / dim;
    m.s2.at(0, col / nbx, col % nbx) = std::max(q, 0.0);
  }
  return m;
}

}  // namespace

// Visual information fidelity in the steerable-pyramid domain: a vector
// Gaussian scale mixture source model per subband, a gain-plus-noise channel
// model fitted per block, and a ratio of accumulated log-information terms.
// The reference-side statistics (covariance eigenvalues, multiplier field)
// are constants with respect to the distorted image.
Var vif_value(const Var& ref, const Var& dist) {
  Var xr = scale255(ref), xd = scale255(dist);
  auto pr = signal::steerable_complex_pyramid(xr, kScales, kOrients);
  auto pd = signal::steerable_complex_pyramid(xd, kScales, kOrients);

  Var num;
  double den = 0.0;
  bool first = true;
  for (int s = 0; s < kScales; ++s)
    for (int o = 0; o < kOrients; ++o) {
      // Real parts recover the symmetric (non-analytic) subband response.
      Var bx = pr.bands[s][o].re;
      Var by = pd.bands[s][o].re;
      if (bx.height() < kM || bx.width() < kM) continue;
      RefBandModel model = fit_ref_band(bx.val());

      Var mu_x = box_mean_stride(bx, kM, kM);
      Var mu_y = box_mean_stride(by, kM, kM);
      Var var_x = sub(box_mean_stride(square(bx), kM, kM), square(mu_x));
      Var var_y = sub(box_mean_stride(square(by), kM, kM), square(mu_y));
      Var cov = sub(box_mean_stride(mul(bx, by), kM, kM), mul(mu_x, mu_y));

      Var g = relu_(div(cov, adds(var_x, kTol)));
      Var sv2 = clamp_min(sub(var_y, mul(g, cov)), kTol);
      Var g2 = square(g);
      Var noise = adds(sv2, kSigmaNsq);

      for (double lambda : model.eigvals) {
        Tensor s2l = model.s2;
        for (size_t i = 0; i < s2l.size(); ++i) s2l.data()[i] *= lambda;
        Var term = sum_all(log2_(adds(div(real_mul_mask(g2, s2l), noise), 1.0)));
        num = first ? term : add(num, term);
        first = false;
        for (size_t i = 0; i < s2l.size(); ++i)
          den += std::log2(1.0 + s2l.data()[i] / kSigmaNsq);
      }
    }
  if (first) throw std::invalid_argument("vif: image too small for block statistics");
  return muls(num, 1.0 / den);
}

}  // namespace pmet::metrics::internal
