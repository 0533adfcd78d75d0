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

#ifndef SASR_NETWORKS_HPP
#define SASR_NETWORKS_HPP

#include "sasr/autodiff.hpp"
#include "sasr/image.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sasr {

/// Convolution (3x3, weight Cout x Cin*9) or dense (weight out x N) layer.
struct Layer {
  std::string name;
  Matrix weight;
  Matrix bias;  // out x 1
  // Written through const references by tapes recording the layer as trainable.
  mutable Matrix weight_grad;
  mutable Matrix bias_grad;
  Index stride = 1;

  Layer() = default;
  Layer(std::string name, Index out, Index in, Index stride);
};

enum class NetworkKind { generator, discriminator, feature_extractor };

struct NetworkParams {
  NetworkKind kind = NetworkKind::generator;
  Index channels = 1;  // image channels K
  Index frames = 1;    // generator input frames
  Index height = 0;    // discriminator input extent
  Index width = 0;
  std::uint64_t seed = 0;
  std::vector<Layer> layers;

  void zero_grad();
  bool all_finite() const;
  Index parameter_count() const;
  /// Multiplies every gradient slot by `factor` (batch averaging).
  void scale_grad(double factor);
};

inline constexpr Index kGeneratorFeatures = 16;
inline constexpr Index kResidualBlocks = 2;
inline constexpr double kLeakySlope = 0.2;

/// Gaussian(0, 1/fan_in) weights, zero biases.
NetworkParams make_generator(Index channels, Index frames, std::uint64_t seed);
NetworkParams make_discriminator(Index channels, Index height, Index width, std::uint64_t seed);

/// Fixed feature network psi: two stride-2 3x3 convs (8 then 16 channels),
/// leaky ReLU 0.2. Never trained.
class FeatureExtractor {
 public:
  FeatureExtractor(Index channels, std::uint64_t seed);
  /// psi == 0 for every input.
  static FeatureExtractor zeros(Index channels);

  Image operator()(const Image& img) const;
  ad::Var graph(ad::Tape& tape, ad::Var x) const;

  const NetworkParams& params() const { return params_; }
  Index channels() const { return params_.channels; }

 private:
  explicit FeatureExtractor(NetworkParams params) : params_(std::move(params)) {}
  NetworkParams params_;
};

inline constexpr std::uint64_t kDefaultFeatureSeed = 0x5eed'f00dULL;

/// How layer parameters enter a tape.
enum class Binding { trainable, frozen };

/**
 * Records the generator on `tape`: bicubic upscale of each LR frame to
 * (hr_height, hr_width), channel concat, conv+ReLU, residual blocks, output
 * conv, plus the upscaled center frame.
 */
ad::Var generator_graph(ad::Tape& tape, const std::vector<Image>& lr_frames, const NetworkParams& params, Index hr_height,
                        Index hr_width, Binding binding);

/// Records the discriminator; returns the sigmoid probability (1x1, unclamped).
ad::Var discriminator_graph(ad::Tape& tape, ad::Var img, const NetworkParams& params, Binding binding);

Image generator_forward(const Image& lr, const NetworkParams& params, Index scale);
Image generator_forward(const FrameStack& frames, const NetworkParams& params, Index scale);

/// D(img), clamped to [1e-7, 1 - 1e-7].
double discriminator_forward(const Image& img, const NetworkParams& params);

}  // namespace sasr

#endif  // SASR_NETWORKS_HPP
