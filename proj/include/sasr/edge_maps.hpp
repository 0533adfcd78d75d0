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

#ifndef SASR_EDGE_MAPS_HPP
#define SASR_EDGE_MAPS_HPP

#include "sasr/image.hpp"

#include <utility>

namespace sasr {

/// Square (2r+1) x (2r+1) analysis window with its border policy.
struct WindowSpec {
  Index radius = 1;
  PadMode padding = PadMode::reflect;

  Index count() const { return (2 * radius + 1) * (2 * radius + 1); }
  void validate() const;
};

enum class EdgeMethod { local_variance, canny };

struct EdgeMapConfig {
  EdgeMethod method = EdgeMethod::local_variance;
  WindowSpec window;
  double delta = 0.01;
  double canny_sigma = 1.0;
  double canny_low = 0.1;
  double canny_high = 0.2;

  void validate() const;
};

struct LocalStats {
  WeightMatrix mean;
  WeightMatrix variance;
};

/// Windowed mean and (population) variance per channel.
LocalStats local_stats(const Image& img, const WindowSpec& window);

/// w = mu / (mu + delta), elementwise; maps [0, inf) onto [0, 1).
WeightMatrix variance_to_weights(const WeightMatrix& variance, double delta);

/**
 * Binary Canny edge map of the luminance of `img` (single channel).
 *
 * Gaussian blur (sigma, truncated at 3 sigma), Sobel gradients, 4-direction
 * non-maximum suppression and 8-connected double-threshold hysteresis.
 * Thresholds are fractions of the maximum gradient magnitude in the image.
 */
WeightMatrix canny_edges(const Image& img, const EdgeMapConfig& cfg);

/// Edge map W(x) with the same shape as `img`.
WeightMatrix extract_edge_map(const Image& img, const EdgeMapConfig& cfg);

/// H = alpha * 1 + beta * W.
WeightMatrix build_weight_matrix(const WeightMatrix& w, double alpha, double beta);

namespace detail {

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma).
Eigen::VectorXd gaussian_kernel(double sigma);

/// Sobel-filtered gradient magnitude and direction inputs of the Canny stage.
struct Gradients {
  Matrix gx;
  Matrix gy;
  Matrix magnitude;
};
Gradients canny_gradients(const Matrix& luminance, double sigma);

}  // namespace detail

}  // namespace sasr

#endif  // SASR_EDGE_MAPS_HPP
