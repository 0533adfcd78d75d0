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

#include "sasr/train.hpp"

#include <cmath>
#include <mutex>
#include <random>
#include <string>

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace sasr {

void TrainConfig::validate() const {
  if (max_iterations < 0) throw PreconditionError("train: max_iterations must be >= 0");
  if (!(lr > 0.0)) throw PreconditionError("train: lr must be positive");
  for (std::size_t i = 0; i < lr_halving_points.size(); ++i) {
    if (i > 0 && lr_halving_points[i] <= lr_halving_points[i - 1])
      throw PreconditionError("train: lr_halving_points must be strictly increasing");
    if (max_iterations > 0 && lr_halving_points[i] >= max_iterations)
      throw PreconditionError("train: lr_halving_points must be below max_iterations");
  }
  if (batch_size <= 0) throw PreconditionError("train: batch_size must be positive");
  if (validate_every <= 0) throw PreconditionError("train: validate_every must be positive");
  if (warmup_iterations < 0) throw PreconditionError("train: warmup_iterations must be >= 0");
  if (!(adam_b1 >= 0.0 && adam_b1 < 1.0 && adam_b2 >= 0.0 && adam_b2 < 1.0 && adam_eps > 0.0))
    throw PreconditionError("train: invalid Adam hyper-parameters");
  if (scale <= 0 || channels <= 0 || hr_size <= 0 || train_samples <= 0 || val_samples < 0)
    throw PreconditionError("train: sizes must be positive");
  if (hr_size % scale != 0) throw PreconditionError("train: hr_size must be divisible by scale");
  edge_cfg.validate();
  coeffs.validate();
}

LossMode TrainConfig::loss_mode() const {
  if (mode == InputMode::multi_frame) return sa ? LossMode::vsr_sa : LossMode::vsr_plain;
  return sa ? LossMode::esr_sa : LossMode::esr_plain;
}

double TrainConfig::lr_at(std::int64_t iteration) const {
  int halvings = 0;
  for (auto p : lr_halving_points)
    if (iteration >= p) ++halvings;
  return std::ldexp(lr, -halvings);
}

AdamState::AdamState(const NetworkParams& params) {
  for (const auto& l : params.layers) {
    m_weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    v_weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    m_bias.push_back(Matrix::Zero(l.bias.rows(), l.bias.cols()));
    v_bias.push_back(Matrix::Zero(l.bias.rows(), l.bias.cols()));
  }
}

namespace {

void adam_update(Matrix& p, const Matrix& g, Matrix& m, Matrix& v, double lr, const AdamHyper& h, double c1,
                 double c2) {
  m = h.b1 * m + (1.0 - h.b1) * g;
  v = h.b2 * v + (1.0 - h.b2) * g.cwiseProduct(g);
  p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + h.eps);
}

}  // namespace

void adam_step(NetworkParams& params, AdamState& state, double lr, const AdamHyper& hyper) {
  if (state.m_weight.size() != params.layers.size()) throw DimensionError("adam_step: state does not match network");
  ++state.step;
  const double c1 = 1.0 - std::pow(hyper.b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hyper.b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    Layer& l = params.layers[i];
    adam_update(l.weight, l.weight_grad, state.m_weight[i], state.v_weight[i], lr, hyper, c1, c2);
    adam_update(l.bias, l.bias_grad, state.m_bias[i], state.v_bias[i], lr, hyper, c1, c2);
  }
  if (!params.all_finite()) throw NumericError("adam_step: parameters became non-finite");
}

Image super_resolve(const Sample& s, const NetworkParams& generator) {
  ad::Tape tape;
  return generator_graph(tape, s.lr_frames, generator, s.hr.height(), s.hr.width(), Binding::frozen).image();
}

LossBreakdown generator_step_loss(const std::vector<const Sample*>& batch, const NetworkParams& generator,
                                  const NetworkParams& discriminator, const FeatureExtractor& extractor,
                                  const TrainConfig& cfg, bool pixel_only) {
  const LossMode mode = cfg.loss_mode();
  const Norm norm = mode_norm(mode);
  const TermWeights tw = term_weights(cfg.coeffs, mode);
  const double eps = cfg.coeffs.epsilon;
  LossBreakdown mean;
  for (const Sample* s : batch) {
    ad::Tape tape;
    const Image& hr = s->hr;
    const ad::Var sr = generator_graph(tape, s->lr_frames, generator, hr.height(), hr.width(), Binding::trainable);
    const Image uniform = Image::constant(hr.channels(), hr.height(), hr.width(), cfg.coeffs.beta1);
    auto pixel = [&](const Image& h) {
      return norm == Norm::l1 ? tape.weighted_l1(sr, hr, h) : tape.weighted_charbonnier(sr, hr, h, eps);
    };
    std::vector<ad::Var> terms;
    LossBreakdown b;
    const ad::Var pu = pixel(uniform);
    b.pixel_uniform_term = pu.scalar();
    terms.push_back(pu);
    if (!pixel_only) {
      const ad::Var p = discriminator_graph(tape, sr, discriminator, Binding::frozen);
      const ad::Var gan = tape.scale(tape.neg_log(p, kMinProbability), tw.gan);
      const Image target = extractor(hr);
      const ad::Var feat = extractor.graph(tape, sr);
      const ad::Var percep = tape.scale(
          tape.weighted_charbonnier(feat, target, Image::constant(target.channels(), target.height(), target.width(), 1.0), eps),
          tw.perceptual);
      b.gan_term = gan.scalar();
      b.perceptual_term = percep.scalar();
      terms.push_back(gan);
      terms.push_back(percep);
      if (is_sa(mode)) {
        const ad::Var sa = pixel(build_weight_matrix(s->edge, 0.0, cfg.coeffs.beta2));
        b.pixel_sa_term = sa.scalar();
        terms.push_back(sa);
      }
    }
    const ad::Var total = tape.scale(tape.sum(terms), 1.0 / static_cast<double>(batch.size()));
    tape.backward(total);
    b.total = b.gan_term + b.perceptual_term + b.pixel_uniform_term + b.pixel_sa_term;
    const double inv = 1.0 / static_cast<double>(batch.size());
    mean.gan_term += inv * b.gan_term;
    mean.perceptual_term += inv * b.perceptual_term;
    mean.pixel_uniform_term += inv * b.pixel_uniform_term;
    mean.pixel_sa_term += inv * b.pixel_sa_term;
    mean.total += inv * b.total;
  }
  return mean;
}

double discriminator_step_loss(const std::vector<const Sample*>& batch, const NetworkParams& generator,
                               const NetworkParams& discriminator) {
  double mean = 0.0;
  for (const Sample* s : batch) {
    const Image sr = super_resolve(*s, generator);
    ad::Tape tape;
    const ad::Var real = discriminator_graph(tape, tape.constant(s->hr), discriminator, Binding::trainable);
    const ad::Var fake = discriminator_graph(tape, tape.constant(sr), discriminator, Binding::trainable);
    const ad::Var loss = tape.scale(tape.sum({tape.neg_log(real, kMinProbability), tape.neg_log1m(fake, kMinProbability)}),
                                    1.0 / static_cast<double>(batch.size()));
    mean += loss.scalar();
    tape.backward(loss);
  }
  return mean;
}

double validation_loss(const std::vector<Sample>& samples, const NetworkParams& generator,
                       const NetworkParams& discriminator, const FeatureExtractor& extractor, const TrainConfig& cfg) {
  if (samples.empty()) throw PreconditionError("validation_loss: no samples");
  double acc = 0.0;
  for (const auto& s : samples) {
    const Image sr = super_resolve(s, generator);
    const double d = discriminator_forward(sr, discriminator);
    acc += total_loss(s.hr, sr, s.edge, std::span<const double>(&d, 1), extractor, cfg.coeffs, cfg.loss_mode()).total;
  }
  return acc / static_cast<double>(samples.size());
}

namespace {

constexpr std::uint64_t kDiscriminatorSeedOffset = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kBatchSeedOffset = 0xbf58476d1ce4e5b9ULL;

void require_edges(const std::vector<Sample>& samples) {
  for (const auto& s : samples)
    if (!s.edge.same_shape(s.hr)) throw PreconditionError("train: samples need cached edge maps (attach_edge_maps)");
}

std::vector<const Sample*> draw_batch(const std::vector<Sample>& data, Index size, std::mt19937_64& rng) {
  std::vector<const Sample*> batch;
  for (Index b = 0; b < size; ++b) batch.push_back(&data[rng() % data.size()]);
  return batch;
}

void check_finite(const LossBreakdown& b, double d_loss, std::int64_t it) {
  if (!std::isfinite(b.total) || !std::isfinite(d_loss))
    throw NumericError("training diverged: non-finite loss at iteration " + std::to_string(it));
}

struct Warmed {
  NetworkParams generator;
  NetworkParams discriminator;
};

AdamHyper hyper_of(const TrainConfig& cfg) { return {cfg.adam_b1, cfg.adam_b2, cfg.adam_eps}; }

// Tape buffers are a few MB each and recycled every step; keep them on the heap instead of fresh mappings.
void keep_large_allocations_on_heap() {
#ifdef __GLIBC__
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}

}  // namespace

double beta2_for_share(double rest, double sa_unit, double share) {
  if (!(sa_unit > 0.0) || !std::isfinite(sa_unit))
    throw NumericError("calibration degenerate: the unit SA term is zero");
  if (!(share > 0.0 && share < 1.0)) throw PreconditionError("calibration: share must lie in (0,1)");
  return share * rest / ((1.0 - share) * sa_unit);
}

CalibrationResult calibrate_beta2(const std::vector<Sample>& samples, const TrainConfig& cfg, double target_share) {
  cfg.validate();
  keep_large_allocations_on_heap();
  if (samples.empty()) throw PreconditionError("calibrate_beta2: no samples");
  require_edges(samples);
  const Sample& first = samples.front();
  NetworkParams g = make_generator(first.hr.channels(), static_cast<Index>(first.lr_frames.size()), cfg.seed);
  const NetworkParams d =
      make_discriminator(first.hr.channels(), first.hr.height(), first.hr.width(), cfg.seed ^ kDiscriminatorSeedOffset);
  const FeatureExtractor fx(first.hr.channels(), cfg.feature_seed);

  std::mt19937_64 rng(cfg.seed ^ kBatchSeedOffset);
  AdamState adam(g);
  for (std::int64_t it = 0; it < cfg.warmup_iterations; ++it) {
    g.zero_grad();
    generator_step_loss(draw_batch(samples, cfg.batch_size, rng), g, d, fx, cfg, true);
    adam_step(g, adam, cfg.lr_at(it), hyper_of(cfg));
  }

  LossCoefficients unit = cfg.coeffs;
  unit.beta2 = 1.0;
  const LossMode mode = is_video(cfg.loss_mode()) ? LossMode::vsr_sa : LossMode::esr_sa;
  std::vector<Image> srs;
  std::vector<double> ds;
  double s_acc = 0.0, b_acc = 0.0;
  for (const auto& s : samples) {
    srs.push_back(super_resolve(s, g));
    ds.push_back(discriminator_forward(srs.back(), d));
    const LossBreakdown b = total_loss(s.hr, srs.back(), s.edge, std::span<const double>(&ds.back(), 1), fx, unit, mode);
    s_acc += std::abs(b.pixel_sa_term);
    b_acc += std::abs(b.gan_term) + std::abs(b.perceptual_term) + std::abs(b.pixel_uniform_term);
  }
  const double n = static_cast<double>(samples.size());
  CalibrationResult r{};
  r.sa_unit = s_acc / n;
  r.rest = b_acc / n;
  r.beta2 = beta2_for_share(r.rest, r.sa_unit, target_share);

  LossCoefficients tuned = cfg.coeffs;
  tuned.beta2 = r.beta2;
  double sa = 0.0, all = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LossBreakdown b =
        total_loss(samples[i].hr, srs[i], samples[i].edge, std::span<const double>(&ds[i], 1), fx, tuned, mode);
    sa += std::abs(b.pixel_sa_term);
    all += std::abs(b.gan_term) + std::abs(b.perceptual_term) + std::abs(b.pixel_uniform_term) + std::abs(b.pixel_sa_term);
  }
  r.share = sa / all;
  if (std::abs(r.share - target_share) > 0.02)
    throw NumericError("calibration post-condition failed: share " + std::to_string(r.share));
  return r;
}

TrainResult train_gan(const std::vector<Sample>& train, const std::vector<Sample>& val, const TrainConfig& cfg) {
  cfg.validate();
  keep_large_allocations_on_heap();
  if (train.empty()) throw PreconditionError("train_gan: empty training data");
  require_edges(train);
  require_edges(val);
  const Sample& first = train.front();
  const Index frames = static_cast<Index>(first.lr_frames.size());
  if (frames != cfg.frames()) throw PreconditionError("train_gan: sample frame count does not match the input mode");

  TrainResult result{make_generator(first.hr.channels(), frames, cfg.seed),
                     make_discriminator(first.hr.channels(), first.hr.height(), first.hr.width(),
                                        cfg.seed ^ kDiscriminatorSeedOffset),
                     {}};
  if (cfg.max_iterations == 0) return result;

  NetworkParams& g = result.generator;
  NetworkParams& d = result.discriminator;
  const FeatureExtractor fx(first.hr.channels(), cfg.feature_seed);
  AdamState adam_g(g), adam_d(d);
  const AdamHyper hyper = hyper_of(cfg);
  std::mt19937_64 rng(cfg.seed ^ kBatchSeedOffset);
  std::optional<NetworkParams> best;
  double best_loss = std::numeric_limits<double>::infinity();

  for (std::int64_t it = 0; it < cfg.max_iterations; ++it) {
    const double lr = cfg.lr_at(it);
    const bool adversarial = it >= cfg.warmup_iterations;
    const auto batch = draw_batch(train, cfg.batch_size, rng);
    HistoryEntry entry{it, lr, adversarial, 0.0, {}};
    if (adversarial) {
      d.zero_grad();
      entry.d_loss = discriminator_step_loss(batch, g, d);
      adam_step(d, adam_d, lr, hyper);
    }
    g.zero_grad();
    entry.g = generator_step_loss(batch, g, d, fx, cfg, !adversarial);
    check_finite(entry.g, entry.d_loss, it);
    adam_step(g, adam_g, lr, hyper);
    result.history.train.push_back(entry);

    const std::int64_t adv_done = it + 1 - cfg.warmup_iterations;
    const bool last = it + 1 == cfg.max_iterations;
    if (adversarial && !val.empty() && (adv_done % cfg.validate_every == 0 || last)) {
      const double v = validation_loss(val, g, d, fx, cfg);
      if (!std::isfinite(v)) throw NumericError("training diverged: non-finite validation loss");
      result.history.validation.push_back({it + 1, v});
      if (v < best_loss) {
        best_loss = v;
        best = g;
        result.history.best_iteration = it + 1;
      }
    }
  }
  if (best) result.generator = std::move(*best);
  result.generator.zero_grad();
  result.discriminator.zero_grad();
  return result;
}

}  // namespace sasr
