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

#ifndef SASR_METRICS_HPP
#define SASR_METRICS_HPP

#include "sasr/image.hpp"

namespace sasr {

inline constexpr double kPsnrCap = 100.0;
/// Reported for an empty edge/flat region.
inline constexpr double kEmptyRegion = -1.0;

struct MetricReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double edge_mae = 0.0;
  double flat_mae = 0.0;
};

/// 10 log10(1 / MSE) for unit-range samples, capped at 100 dB.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over all valid 11x11 Gaussian (sigma 1.5) windows of the
/// luminance, C1 = 0.01^2, C2 = 0.03^2.
double ssim(const Image& a, const Image& b);

struct RegionError {
  double edge_mae;
  double flat_mae;
  Index edge_count;
  Index flat_count;
};

/// MAE over elements with w >= tau (edge) and w < tau (flat).
RegionError edge_region_mae(const Image& hr, const Image& sr, const Image& w, double tau);

MetricReport evaluate(const Image& hr, const Image& sr, const Image& w, double tau);

}  // namespace sasr

#endif  // SASR_METRICS_HPP
