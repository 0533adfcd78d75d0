/*
 * Copyright 2026 The sasr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sasr/metrics.hpp"

#include "sasr/edge_maps.hpp"

#include <cmath>

namespace sasr {

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  const double mse = (a.data() - b.data()).squaredNorm() / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

constexpr Index kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// Valid-mode separable filtering: output (h - 10) x (w - 10).
Matrix filter_valid(const Matrix& m, const Eigen::VectorXd& g) {
  const Index n = g.size();
  const Index oh = m.rows() - n + 1, ow = m.cols() - n + 1;
  Matrix rows_done = Matrix::Zero(m.rows(), ow);
  for (Index t = 0; t < n; ++t) rows_done += g(t) * m.middleCols(t, ow);
  Matrix out = Matrix::Zero(oh, ow);
  for (Index t = 0; t < n; ++t) out += g(t) * rows_done.middleRows(t, oh);
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (a.height() < kSsimWindow || a.width() < kSsimWindow)
    throw PreconditionError("ssim: image must be at least 11x11");
  const Matrix x = to_luminance(a).channel(0);
  const Matrix y = to_luminance(b).channel(0);
  Eigen::VectorXd g(kSsimWindow);
  for (Index t = 0; t < kSsimWindow; ++t) {
    const double d = static_cast<double>(t - kSsimWindow / 2);
    g(t) = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
  }
  g /= g.sum();

  const Matrix mx = filter_valid(x, g);
  const Matrix my = filter_valid(y, g);
  const Matrix sxx = filter_valid(x.cwiseProduct(x), g) - mx.cwiseProduct(mx);
  const Matrix syy = filter_valid(y.cwiseProduct(y), g) - my.cwiseProduct(my);
  const Matrix sxy = filter_valid(x.cwiseProduct(y), g) - mx.cwiseProduct(my);

  const auto num = (2.0 * mx.array() * my.array() + kC1) * (2.0 * sxy.array() + kC2);
  const auto den = (mx.array().square() + my.array().square() + kC1) * (sxx.array() + syy.array() + kC2);
  return (num / den).mean();
}

RegionError edge_region_mae(const Image& hr, const Image& sr, const Image& w, double tau) {
  require_same_shape(hr, sr, "edge_region_mae");
  require_same_shape(hr, w, "edge_region_mae");
  if (!(tau >= 0.0 && tau <= 1.0)) throw PreconditionError("edge_region_mae: tau must lie in [0,1]");
  const auto err = (hr.data() - sr.data()).array().abs();
  const auto edge = (w.data().array() >= tau);
  const Index n_edge = edge.count();
  const Index n_flat = w.size() - n_edge;
  const double e_sum = edge.select(err, 0.0).sum();
  const double f_sum = edge.select(0.0, err).sum();
  return {n_edge > 0 ? e_sum / static_cast<double>(n_edge) : kEmptyRegion,
          n_flat > 0 ? f_sum / static_cast<double>(n_flat) : kEmptyRegion, n_edge, n_flat};
}

MetricReport evaluate(const Image& hr, const Image& sr, const Image& w, double tau) {
  const RegionError re = edge_region_mae(hr, sr, w, tau);
  return {psnr(hr, sr), ssim(hr, sr), re.edge_mae, re.flat_mae};
}

}  // namespace sasr
