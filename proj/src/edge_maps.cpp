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

#include "sasr/edge_maps.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace sasr {

void WindowSpec::validate() const {
  if (radius < 1) throw PreconditionError("window radius must be >= 1");
}

void EdgeMapConfig::validate() const {
  window.validate();
  if (!(delta > 0.0)) throw PreconditionError("delta must be positive");
  if (!(canny_sigma > 0.0)) throw PreconditionError("canny sigma must be positive");
  if (!(canny_low > 0.0 && canny_low < 1.0 && canny_high > 0.0 && canny_high < 1.0))
    throw PreconditionError("canny thresholds must lie in (0,1)");
  if (!(canny_low < canny_high)) throw PreconditionError("canny low threshold must be below the high threshold");
}

LocalStats local_stats(const Image& img, const WindowSpec& window) {
  window.validate();
  const Index r = window.radius;
  const Image padded = pad(img, PaddingPolicy::uniform(r, window.padding));
  const double inv_count = 1.0 / static_cast<double>(window.count());
  LocalStats out{Image(img.channels(), img.height(), img.width()), Image(img.channels(), img.height(), img.width())};
  for (Index k = 0; k < img.channels(); ++k) {
    const auto src = padded.channel(k);
    auto mean = out.mean.channel(k);
    auto var = out.variance.channel(k);
    for (Index i = 0; i < img.height(); ++i) {
      for (Index j = 0; j < img.width(); ++j) {
        const auto win = src.block(i, j, 2 * r + 1, 2 * r + 1);
        const double lo = win.minCoeff();
        if (lo == win.maxCoeff()) {
          mean(i, j) = lo;
          var(i, j) = 0.0;
          continue;
        }
        const double m = win.sum() * inv_count;
        mean(i, j) = m;
        var(i, j) = (win.array() - m).square().sum() * inv_count;
      }
    }
  }
  return out;
}

WeightMatrix variance_to_weights(const WeightMatrix& variance, double delta) {
  if (!(delta > 0.0)) throw PreconditionError("variance_to_weights: delta must be positive");
  if ((variance.data().array() < 0.0).any())
    throw PreconditionError("variance_to_weights: negative variance");
  WeightMatrix w = variance;
  w.data() = variance.data().array() / (variance.data().array() + delta);
  return w;
}

namespace detail {

Eigen::VectorXd gaussian_kernel(double sigma) {
  const Index radius = static_cast<Index>(std::ceil(3.0 * sigma));
  Eigen::VectorXd g(2 * radius + 1);
  for (Index t = -radius; t <= radius; ++t)
    g(t + radius) = std::exp(-static_cast<double>(t * t) / (2.0 * sigma * sigma));
  return g / g.sum();
}

namespace {

PadMode safe_pad_mode(const Matrix& m, Index margin) {
  return margin < m.rows() && margin < m.cols() ? PadMode::reflect : PadMode::replicate;
}

Matrix padded(const Matrix& m, Index margin) {
  const Image img(m.rows(), m.cols(), Eigen::Map<const Matrix>(m.data(), 1, m.size()));
  const Image p = pad(img, PaddingPolicy::uniform(margin, safe_pad_mode(m, margin)));
  return p.channel(0);
}

Matrix separable_blur(const Matrix& m, const Eigen::VectorXd& g) {
  const Index r = (g.size() - 1) / 2;
  const Matrix p = padded(m, r);
  Matrix rows_done = Matrix::Zero(p.rows(), m.cols());
  for (Index t = 0; t < g.size(); ++t) rows_done += g(t) * p.middleCols(t, m.cols());
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (Index t = 0; t < g.size(); ++t) out += g(t) * rows_done.middleRows(t, m.rows());
  return out;
}

}  // namespace

Gradients canny_gradients(const Matrix& luminance, double sigma) {
  const Matrix blurred = separable_blur(luminance, gaussian_kernel(sigma));
  const Matrix p = padded(blurred, 1);
  const Index h = luminance.rows(), w = luminance.cols();
  Gradients g{Matrix(h, w), Matrix(h, w), Matrix(h, w)};
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      // p is offset by one: p(i + 1, j + 1) is the center sample.
      const double gx = (p(i, j + 2) + 2.0 * p(i + 1, j + 2) + p(i + 2, j + 2)) -
                        (p(i, j) + 2.0 * p(i + 1, j) + p(i + 2, j));
      const double gy = (p(i + 2, j) + 2.0 * p(i + 2, j + 1) + p(i + 2, j + 2)) -
                        (p(i, j) + 2.0 * p(i, j + 1) + p(i, j + 2));
      g.gx(i, j) = gx;
      g.gy(i, j) = gy;
      g.magnitude(i, j) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return g;
}

}  // namespace detail

WeightMatrix canny_edges(const Image& img, const EdgeMapConfig& cfg) {
  if (cfg.method != EdgeMethod::canny) throw PreconditionError("canny_edges: config method is not canny");
  cfg.validate();
  const Image lum = to_luminance(img);
  const auto grad = detail::canny_gradients(lum.channel(0), cfg.canny_sigma);
  const Index h = lum.height(), w = lum.width();
  WeightMatrix edges(1, h, w, 0.0);
  const double max_mag = grad.magnitude.maxCoeff();
  if (!(max_mag > 0.0)) return edges;

  auto mag_at = [&](Index i, Index j) {
    return (i < 0 || j < 0 || i >= h || j >= w) ? 0.0 : grad.magnitude(i, j);
  };

  // Non-maximum suppression. The neighbour earlier in raster order must be
  // strictly smaller, the later one smaller or equal, so exactly one sample
  // of a tied pair survives.
  Matrix nms = Matrix::Zero(h, w);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      const double m = grad.magnitude(i, j);
      if (m == 0.0) continue;
      double angle = std::atan2(grad.gy(i, j), grad.gx(i, j)) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      double before, after;
      if (angle < 22.5 || angle >= 157.5) {
        before = mag_at(i, j - 1);
        after = mag_at(i, j + 1);
      } else if (angle < 67.5) {
        before = mag_at(i - 1, j - 1);
        after = mag_at(i + 1, j + 1);
      } else if (angle < 112.5) {
        before = mag_at(i - 1, j);
        after = mag_at(i + 1, j);
      } else {
        before = mag_at(i - 1, j + 1);
        after = mag_at(i + 1, j - 1);
      }
      if (m > before && m >= after) nms(i, j) = m;
    }
  }

  const double low = cfg.canny_low * max_mag;
  const double high = cfg.canny_high * max_mag;
  std::vector<std::pair<Index, Index>> stack;
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j)
      if (nms(i, j) > high) {
        edges(0, i, j) = 1.0;
        stack.emplace_back(i, j);
      }
  while (!stack.empty()) {
    const auto [ci, cj] = stack.back();
    stack.pop_back();
    for (Index di = -1; di <= 1; ++di)
      for (Index dj = -1; dj <= 1; ++dj) {
        const Index ni = ci + di, nj = cj + dj;
        if (ni < 0 || nj < 0 || ni >= h || nj >= w) continue;
        if (edges(0, ni, nj) == 0.0 && nms(ni, nj) > low) {
          edges(0, ni, nj) = 1.0;
          stack.emplace_back(ni, nj);
        }
      }
  }
  return edges;
}

WeightMatrix extract_edge_map(const Image& img, const EdgeMapConfig& cfg) {
  cfg.validate();
  switch (cfg.method) {
    case EdgeMethod::local_variance:
      return variance_to_weights(local_stats(img, cfg.window).variance, cfg.delta);
    case EdgeMethod::canny:
      return broadcast_channels(canny_edges(img, cfg), img.channels());
  }
  throw PreconditionError("extract_edge_map: unknown method");
}

WeightMatrix build_weight_matrix(const WeightMatrix& w, double alpha, double beta) {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw PreconditionError("build_weight_matrix: alpha and beta must be >= 0");
  WeightMatrix h = w;
  h.data() = (beta * w.data().array() + alpha).matrix();
  return h;
}

}  // namespace sasr
