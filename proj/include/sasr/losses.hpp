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

#ifndef SASR_LOSSES_HPP
#define SASR_LOSSES_HPP

#include "sasr/edge_maps.hpp"
#include "sasr/image.hpp"

#include <functional>
#include <span>
#include <string_view>

namespace sasr {

class FeatureExtractor;

enum class Norm { l1, charbonnier };

/**
 * Loss weights.
 *
 * `alpha` weights the GAN term in the single-image losses; `alpha1` and
 * `alpha2` weight the GAN and perceptual terms in the multi-frame losses.
 * `beta1` is the uniform pixel weight (the plain losses' beta) and `beta2`
 * the edge-map weight of the spatially adaptive term.
 */
struct LossCoefficients {
  double alpha = 0.005;
  double alpha1 = 0.001;
  double alpha2 = 0.998;
  double beta1 = 0.01;
  double beta2 = 20.0;
  double epsilon = 0.001;
  Norm norm = Norm::l1;

  void validate() const;

  static LossCoefficients esrgan_plain();
  static LossCoefficients esrgan_sa();
  static LossCoefficients vsr_plain();
  static LossCoefficients vsr_sa_local_variance();
  static LossCoefficients vsr_sa_canny();
};

struct LossBreakdown {
  double gan_term = 0.0;
  double perceptual_term = 0.0;
  double pixel_uniform_term = 0.0;
  double pixel_sa_term = 0.0;
  double total = 0.0;
};

enum class LossMode { esr_plain, esr_sa, vsr_plain, vsr_sa };

inline bool is_sa(LossMode m) { return m == LossMode::esr_sa || m == LossMode::vsr_sa; }
inline bool is_video(LossMode m) { return m == LossMode::vsr_plain || m == LossMode::vsr_sa; }
/// l1 for the single-image losses, Charbonnier for the multi-frame ones.
inline Norm mode_norm(LossMode m) { return is_video(m) ? Norm::charbonnier : Norm::l1; }

LossMode parse_loss_mode(std::string_view name);
std::string_view to_string(LossMode m);

/// Probability clamp applied before every log.
inline constexpr double kMinProbability = 1e-7;

// Distances. Sums over (k, i, j); H weights each element.

template <typename Scalar>
Scalar weighted_l1(const ImageT<Scalar>& u, const ImageT<Scalar>& v, const ImageT<Scalar>& h) {
  require_same_shape(u, v, "weighted_l1");
  require_same_shape(u, h, "weighted_l1");
  return (h.data().array() * (u.data() - v.data()).array().abs()).sum();
}

template <typename Scalar>
Scalar weighted_charbonnier(const ImageT<Scalar>& u, const ImageT<Scalar>& v, const ImageT<Scalar>& h, Scalar eps) {
  require_same_shape(u, v, "weighted_charbonnier");
  require_same_shape(u, h, "weighted_charbonnier");
  if (!(eps > Scalar(0))) throw PreconditionError("weighted_charbonnier: epsilon must be positive");
  return (h.data().array() * ((u.data() - v.data()).array().square() + eps * eps).sqrt()).sum();
}

template <typename Scalar>
Scalar weighted_distance(const ImageT<Scalar>& u, const ImageT<Scalar>& v, const ImageT<Scalar>& h, Norm norm,
                         Scalar eps) {
  return norm == Norm::l1 ? weighted_l1(u, v, h) : weighted_charbonnier(u, v, h, eps);
}

/// d/dv of the weighted distance selected by `coeffs.norm`, with sign(0) = 0.
template <typename Scalar>
ImageT<Scalar> grad_weighted_loss(const ImageT<Scalar>& u, const ImageT<Scalar>& v, const ImageT<Scalar>& h,
                                  Norm norm, Scalar eps) {
  require_same_shape(u, v, "grad_weighted_loss");
  require_same_shape(u, h, "grad_weighted_loss");
  ImageT<Scalar> g = v;
  const auto d = (u.data() - v.data()).array();
  if (norm == Norm::l1) {
    g.data() = -(h.data().array() * d.sign()).matrix();
  } else {
    if (!(eps > Scalar(0))) throw PreconditionError("grad_weighted_loss: epsilon must be positive");
    g.data() = -(h.data().array() * d / (d.square() + eps * eps).sqrt()).matrix();
  }
  return g;
}

inline Image grad_weighted_loss(const Image& u, const Image& v, const Image& h, const LossCoefficients& coeffs) {
  return grad_weighted_loss(u, v, h, coeffs.norm, coeffs.epsilon);
}

/// Pixel loss with H = beta1 * 1 + beta2 * W, using `coeffs.norm`.
double sa_pixel_loss(const Image& hr, const Image& sr, const WeightMatrix& w, const LossCoefficients& coeffs);

/// Maps an image to its feature tensor (psi).
using FeatureMap = std::function<Image(const Image&)>;

/// Charbonnier distance with H = 1 between psi(hr) and psi(sr).
double perceptual_loss(const Image& hr, const Image& sr, const FeatureExtractor& extractor, double eps);
double perceptual_loss(const Image& hr, const Image& sr, const FeatureMap& extractor, double eps);

/// -mean log d_real - mean log(1 - d_fake), probabilities clamped.
double gan_discriminator_loss(std::span<const double> d_real, std::span<const double> d_fake);

/// Non-saturating generator side: -mean log d_fake.
double gan_generator_loss(std::span<const double> d_fake);

/**
 * Composite generator objective for one (hr, sr) pair.
 *
 * The mode picks the norm (l1 for esr_*, Charbonnier for vsr_*) and the
 * weight layout: plain modes use H = beta1 * 1, SA modes split the pixel
 * loss into beta1 * L(1) and beta2 * L(W).
 */
LossBreakdown total_loss(const Image& hr, const Image& sr, const WeightMatrix& w, std::span<const double> d_fake,
                         const FeatureExtractor& extractor, const LossCoefficients& coeffs, LossMode mode);

/// GAN and perceptual weights of a mode.
struct TermWeights {
  double gan;
  double perceptual;
};
TermWeights term_weights(const LossCoefficients& coeffs, LossMode mode);

}  // namespace sasr

#endif  // SASR_LOSSES_HPP
