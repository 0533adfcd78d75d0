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

#include "sasr/losses.hpp"

#include "sasr/networks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sasr {

void LossCoefficients::validate() const {
  if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be positive");
  for (double c : {alpha, alpha1, alpha2, beta1, beta2, epsilon})
    if (!std::isfinite(c)) throw PreconditionError("loss coefficients must be finite");
  if (beta1 < 0.0 || beta2 < 0.0) throw PreconditionError("pixel weights beta1/beta2 must be >= 0");
}

LossCoefficients LossCoefficients::esrgan_plain() {
  LossCoefficients c;
  c.alpha = 0.005;
  c.beta1 = 0.01;
  c.beta2 = 0.0;
  c.norm = Norm::l1;
  return c;
}

LossCoefficients LossCoefficients::esrgan_sa() {
  LossCoefficients c = esrgan_plain();
  c.beta2 = 20.0;
  return c;
}

LossCoefficients LossCoefficients::vsr_plain() {
  LossCoefficients c;
  c.alpha1 = 0.001;
  c.alpha2 = 0.998;
  c.beta1 = 0.001;
  c.beta2 = 0.0;
  c.norm = Norm::charbonnier;
  return c;
}

LossCoefficients LossCoefficients::vsr_sa_local_variance() {
  LossCoefficients c = vsr_plain();
  c.beta2 = 5.0;
  return c;
}

LossCoefficients LossCoefficients::vsr_sa_canny() {
  LossCoefficients c = vsr_plain();
  c.beta2 = 1.5;
  return c;
}

LossMode parse_loss_mode(std::string_view name) {
  std::string n(name);
  std::replace(n.begin(), n.end(), '-', '_');
  if (n == "esr_plain") return LossMode::esr_plain;
  if (n == "esr_sa") return LossMode::esr_sa;
  if (n == "vsr_plain") return LossMode::vsr_plain;
  if (n == "vsr_sa") return LossMode::vsr_sa;
  throw PreconditionError("unknown loss mode: " + std::string(name));
}

std::string_view to_string(LossMode m) {
  switch (m) {
    case LossMode::esr_plain: return "esr_plain";
    case LossMode::esr_sa: return "esr_sa";
    case LossMode::vsr_plain: return "vsr_plain";
    case LossMode::vsr_sa: return "vsr_sa";
  }
  return "?";
}

double sa_pixel_loss(const Image& hr, const Image& sr, const WeightMatrix& w, const LossCoefficients& coeffs) {
  require_same_shape(hr, sr, "sa_pixel_loss");
  require_same_shape(hr, w, "sa_pixel_loss");
  const WeightMatrix h = build_weight_matrix(w, coeffs.beta1, coeffs.beta2);
  return weighted_distance(hr, sr, h, coeffs.norm, coeffs.epsilon);
}

double perceptual_loss(const Image& hr, const Image& sr, const FeatureMap& extractor, double eps) {
  require_same_shape(hr, sr, "perceptual_loss");
  const Image fh = extractor(hr);
  const Image fs = extractor(sr);
  require_same_shape(fh, fs, "perceptual_loss features");
  return weighted_charbonnier(fh, fs, Image::constant(fh.channels(), fh.height(), fh.width(), 1.0), eps);
}

double perceptual_loss(const Image& hr, const Image& sr, const FeatureExtractor& extractor, double eps) {
  if (hr.channels() != extractor.channels()) throw DimensionError("perceptual_loss: extractor channel mismatch");
  return perceptual_loss(hr, sr, FeatureMap([&extractor](const Image& x) { return extractor(x); }), eps);
}

namespace {

double mean_neg_log(std::span<const double> p, bool complement) {
  double acc = 0.0;
  for (double v : p) {
    const double c = std::clamp(v, kMinProbability, 1.0 - kMinProbability);
    acc += complement ? -std::log1p(-c) : -std::log(c);
  }
  return acc / static_cast<double>(p.size());
}

}  // namespace

double gan_discriminator_loss(std::span<const double> d_real, std::span<const double> d_fake) {
  if (d_real.empty() || d_fake.empty()) throw PreconditionError("gan_discriminator_loss: empty batch");
  return mean_neg_log(d_real, false) + mean_neg_log(d_fake, true);
}

double gan_generator_loss(std::span<const double> d_fake) {
  if (d_fake.empty()) throw PreconditionError("gan_generator_loss: empty batch");
  return mean_neg_log(d_fake, false);
}

TermWeights term_weights(const LossCoefficients& coeffs, LossMode mode) {
  if (is_video(mode)) return {coeffs.alpha1, coeffs.alpha2};
  return {coeffs.alpha, 1.0};
}

LossBreakdown total_loss(const Image& hr, const Image& sr, const WeightMatrix& w, std::span<const double> d_fake,
                         const FeatureExtractor& extractor, const LossCoefficients& coeffs, LossMode mode) {
  coeffs.validate();
  require_same_shape(hr, sr, "total_loss");
  require_same_shape(hr, w, "total_loss");
  const Norm norm = mode_norm(mode);
  const TermWeights tw = term_weights(coeffs, mode);
  const Image ones = Image::constant(hr.channels(), hr.height(), hr.width(), 1.0);

  LossBreakdown b;
  b.gan_term = tw.gan * gan_generator_loss(d_fake);
  b.perceptual_term = tw.perceptual * perceptual_loss(hr, sr, extractor, coeffs.epsilon);
  b.pixel_uniform_term = coeffs.beta1 * weighted_distance(hr, sr, ones, norm, coeffs.epsilon);
  b.pixel_sa_term = is_sa(mode) ? coeffs.beta2 * weighted_distance(hr, sr, w, norm, coeffs.epsilon) : 0.0;
  b.total = b.gan_term + b.perceptual_term + b.pixel_uniform_term + b.pixel_sa_term;
  for (double t : {b.gan_term, b.perceptual_term, b.pixel_uniform_term, b.pixel_sa_term, b.total})
    if (!std::isfinite(t)) throw NumericError("total_loss: non-finite term");
  return b;
}

}  // namespace sasr
