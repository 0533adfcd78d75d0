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

#ifndef SASR_TRAIN_HPP
#define SASR_TRAIN_HPP

#include "sasr/edge_maps.hpp"
#include "sasr/losses.hpp"
#include "sasr/networks.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace sasr {

enum class InputMode { single_image, multi_frame };

inline constexpr Index kVideoFrames = 5;

/**
 * Adversarial training schedule.
 *
 * Defaults follow the published single-image schedule (Adam, lr 1e-4 halved
 * at 50k/100k/200k/300k, 500k iterations, batch 16); desk-scale runs
 * override the sizes.
 */
struct TrainConfig {
  std::int64_t max_iterations = 500000;
  double lr = 1e-4;
  std::vector<std::int64_t> lr_halving_points = {50000, 100000, 200000, 300000};
  Index batch_size = 16;
  double adam_b1 = 0.9;
  double adam_b2 = 0.999;
  double adam_eps = 1e-8;
  std::int64_t validate_every = 1000;
  /// Generator-only steps on the uniform pixel loss before adversarial updates.
  std::int64_t warmup_iterations = 200;
  std::uint64_t seed = 0;
  std::uint64_t feature_seed = kDefaultFeatureSeed;
  InputMode mode = InputMode::single_image;
  Index scale = 4;
  bool sa = true;
  EdgeMapConfig edge_cfg;
  LossCoefficients coeffs;

  // Synthetic data.
  Index channels = 1;
  Index hr_size = 48;
  Index train_samples = 64;
  Index val_samples = 8;

  void validate() const;
  LossMode loss_mode() const;
  Index frames() const { return mode == InputMode::multi_frame ? kVideoFrames : 1; }
  /// lr * 2^-m where m counts halving points <= iteration.
  double lr_at(std::int64_t iteration) const;
};

struct AdamState {
  std::vector<Matrix> m_weight, v_weight, m_bias, v_bias;
  std::int64_t step = 0;

  explicit AdamState(const NetworkParams& params);
};

struct AdamHyper {
  double b1 = 0.9;
  double b2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update from the gradient slots of `params`.
void adam_step(NetworkParams& params, AdamState& state, double lr, const AdamHyper& hyper = {});

/// One training pair. W(hr) is cached in `edge`.
struct Sample {
  std::vector<Image> lr_frames;
  Image hr;
  WeightMatrix edge;

  const Image& lr() const { return lr_frames[lr_frames.size() / 2]; }
};

/**
 * Seeded edge-rich patches (rectangles, discs, lines, ramps, sinusoid
 * textures) on [0,1]. LR frames are bicubic downscales; multi-frame samples
 * carry five sub-pixel shifted renderings with the center one as target.
 */
std::vector<Sample> make_synthetic_dataset(Index n, Index hr_size, Index scale, std::uint64_t seed,
                                           InputMode mode = InputMode::single_image, Index channels = 1);

/// Fills Sample::edge with extract_edge_map(hr).
void attach_edge_maps(std::vector<Sample>& samples, const EdgeMapConfig& cfg);

struct Datasets {
  std::vector<Sample> train;
  std::vector<Sample> val;
};

/// Training and validation sets sized by `cfg`, edge maps attached.
Datasets make_datasets(const TrainConfig& cfg, std::uint64_t data_seed);

inline constexpr double kTargetSaShare = 0.15;

struct CalibrationResult {
  double beta2;
  double share;        // achieved SA share with beta2 in place
  double sa_unit;      // S: mean unit SA term
  double rest;         // B: mean |GAN| + |perceptual| + |uniform pixel|
};

/// beta2 = s B / ((1 - s) S) measured at the warmed-up initialization.
CalibrationResult calibrate_beta2(const std::vector<Sample>& samples, const TrainConfig& cfg,
                                  double target_share = kTargetSaShare);

/// Closed form used by calibrate_beta2.
double beta2_for_share(double rest, double sa_unit, double share);

struct HistoryEntry {
  std::int64_t iteration;
  double lr;
  bool adversarial;
  double d_loss;
  LossBreakdown g;
};

struct ValidationEntry {
  std::int64_t iteration;
  double loss;
};

struct History {
  std::vector<HistoryEntry> train;
  std::vector<ValidationEntry> validation;
  std::optional<std::int64_t> best_iteration;
};

struct TrainResult {
  NetworkParams generator;
  NetworkParams discriminator;
  History history;
};

/// Discriminator-then-generator alternating loop; returns the generator
/// snapshot with minimum validation loss.
TrainResult train_gan(const std::vector<Sample>& train, const std::vector<Sample>& val, const TrainConfig& cfg);

/// Batch-mean generator objective and its parameter gradients (left in the
/// generator's gradient slots).
LossBreakdown generator_step_loss(const std::vector<const Sample*>& batch, const NetworkParams& generator,
                                  const NetworkParams& discriminator, const FeatureExtractor& extractor,
                                  const TrainConfig& cfg, bool pixel_only);

/// Batch-mean discriminator loss and gradients (left in the discriminator's slots).
double discriminator_step_loss(const std::vector<const Sample*>& batch, const NetworkParams& generator,
                               const NetworkParams& discriminator);

/// Mean total_loss of the mode over `samples`.
double validation_loss(const std::vector<Sample>& samples, const NetworkParams& generator,
                       const NetworkParams& discriminator, const FeatureExtractor& extractor, const TrainConfig& cfg);

Image super_resolve(const Sample& s, const NetworkParams& generator);

}  // namespace sasr

#endif  // SASR_TRAIN_HPP
