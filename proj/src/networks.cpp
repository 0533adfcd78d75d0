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

#include "sasr/networks.hpp"

#include "sasr/losses.hpp"

#include <cmath>
#include <random>

namespace sasr {

Layer::Layer(std::string n, Index out, Index in, Index s)
    : name(std::move(n)),
      weight(Matrix::Zero(out, in)),
      bias(Matrix::Zero(out, 1)),
      weight_grad(Matrix::Zero(out, in)),
      bias_grad(Matrix::Zero(out, 1)),
      stride(s) {}

void NetworkParams::zero_grad() {
  for (auto& l : layers) {
    l.weight_grad.setZero();
    l.bias_grad.setZero();
  }
}

bool NetworkParams::all_finite() const {
  for (const auto& l : layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

Index NetworkParams::parameter_count() const {
  Index n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void NetworkParams::scale_grad(double factor) {
  for (auto& l : layers) {
    l.weight_grad *= factor;
    l.bias_grad *= factor;
  }
}

namespace {

void init_gaussian(NetworkParams& p) {
  std::mt19937_64 rng(p.seed);
  for (auto& l : p.layers) {
    std::normal_distribution<double> dist(0.0, std::sqrt(1.0 / static_cast<double>(l.weight.cols())));
    for (Index r = 0; r < l.weight.rows(); ++r)
      for (Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = dist(rng);
  }
}

Index stride2_extent(Index n) { return (n - 1) / 2 + 1; }

struct Bound {
  ad::Var weight;
  ad::Var bias;
};

Bound bind(ad::Tape& tape, const Layer& l, Binding binding) {
  if (binding == Binding::trainable)
    return {tape.parameter(l.weight, &l.weight_grad), tape.parameter(l.bias, &l.bias_grad)};
  return {tape.constant(l.weight), tape.constant(l.bias)};
}

ad::Var conv(ad::Tape& tape, ad::Var x, const Layer& l, Binding binding) {
  const Bound b = bind(tape, l, binding);
  return tape.conv2d(x, b.weight, b.bias, l.stride);
}

}  // namespace

NetworkParams make_generator(Index channels, Index frames, std::uint64_t seed) {
  if (channels <= 0 || frames <= 0) throw PreconditionError("make_generator: channels and frames must be positive");
  NetworkParams p;
  p.kind = NetworkKind::generator;
  p.channels = channels;
  p.frames = frames;
  p.seed = seed;
  const Index f = kGeneratorFeatures;
  p.layers.emplace_back("head", f, channels * frames * 9, 1);
  for (Index b = 0; b < kResidualBlocks; ++b) {
    p.layers.emplace_back("res" + std::to_string(b) + ".conv0", f, f * 9, 1);
    p.layers.emplace_back("res" + std::to_string(b) + ".conv1", f, f * 9, 1);
  }
  p.layers.emplace_back("tail", channels, f * 9, 1);
  init_gaussian(p);
  return p;
}

NetworkParams make_discriminator(Index channels, Index height, Index width, std::uint64_t seed) {
  if (channels <= 0 || height < 5 || width < 5)
    throw PreconditionError("make_discriminator: every stride-2 layer needs at least two samples per axis (input >= 5x5)");
  NetworkParams p;
  p.kind = NetworkKind::discriminator;
  p.channels = channels;
  p.height = height;
  p.width = width;
  p.seed = seed;
  p.layers.emplace_back("conv0", 8, channels * 9, 2);
  p.layers.emplace_back("conv1", 16, 8 * 9, 2);
  p.layers.emplace_back("conv2", 32, 16 * 9, 2);
  const Index h3 = stride2_extent(stride2_extent(stride2_extent(height)));
  const Index w3 = stride2_extent(stride2_extent(stride2_extent(width)));
  p.layers.emplace_back("dense", 1, 32 * h3 * w3, 1);
  init_gaussian(p);
  return p;
}

FeatureExtractor::FeatureExtractor(Index channels, std::uint64_t seed) {
  if (channels <= 0) throw PreconditionError("FeatureExtractor: channels must be positive");
  params_.kind = NetworkKind::feature_extractor;
  params_.channels = channels;
  params_.seed = seed;
  params_.layers.emplace_back("conv0", 8, channels * 9, 2);
  params_.layers.emplace_back("conv1", 16, 8 * 9, 2);
  init_gaussian(params_);
}

FeatureExtractor FeatureExtractor::zeros(Index channels) {
  FeatureExtractor fx(channels, 0);
  for (auto& l : fx.params_.layers) l.weight.setZero();
  return fx;
}

ad::Var FeatureExtractor::graph(ad::Tape& tape, ad::Var x) const {
  if (x.channels() != params_.channels) throw DimensionError("FeatureExtractor: channel mismatch");
  for (const auto& l : params_.layers) x = tape.leaky_relu(conv(tape, x, l, Binding::frozen), kLeakySlope);
  return x;
}

Image FeatureExtractor::operator()(const Image& img) const {
  ad::Tape tape;
  return graph(tape, tape.constant(img)).image();
}

ad::Var generator_graph(ad::Tape& tape, const std::vector<Image>& lr_frames, const NetworkParams& params,
                        Index hr_height, Index hr_width, Binding binding) {
  if (params.kind != NetworkKind::generator) throw PreconditionError("generator_graph: not generator parameters");
  if (static_cast<Index>(lr_frames.size()) != params.frames)
    throw PreconditionError("generator: expected " + std::to_string(params.frames) + " input frame(s), got " +
                            std::to_string(lr_frames.size()));
  std::vector<ad::Var> upscaled;
  upscaled.reserve(lr_frames.size());
  for (const auto& f : lr_frames) {
    if (f.channels() != params.channels) throw DimensionError("generator: frame channel mismatch");
    upscaled.push_back(tape.constant(resize_bicubic(f, hr_height, hr_width)));
  }
  const ad::Var center = upscaled[upscaled.size() / 2];
  ad::Var x = upscaled.size() == 1 ? center : tape.concat_channels(upscaled);

  std::size_t li = 0;
  x = tape.relu(conv(tape, x, params.layers[li++], binding));
  for (Index b = 0; b < kResidualBlocks; ++b) {
    ad::Var y = tape.relu(conv(tape, x, params.layers[li++], binding));
    y = conv(tape, y, params.layers[li++], binding);
    x = tape.add(x, y);
  }
  x = conv(tape, x, params.layers[li++], binding);
  return tape.add(x, center);
}

ad::Var discriminator_graph(ad::Tape& tape, ad::Var img, const NetworkParams& params, Binding binding) {
  if (params.kind != NetworkKind::discriminator) throw PreconditionError("discriminator_graph: not discriminator parameters");
  if (img.channels() != params.channels || img.height() != params.height || img.width() != params.width)
    throw DimensionError("discriminator: input shape does not match the network");
  ad::Var x = img;
  for (std::size_t i = 0; i + 1 < params.layers.size(); ++i)
    x = tape.leaky_relu(conv(tape, x, params.layers[i], binding), kLeakySlope);
  const Bound d = bind(tape, params.layers.back(), binding);
  return tape.sigmoid(tape.dense(x, d.weight, d.bias));
}

Image generator_forward(const Image& lr, const NetworkParams& params, Index scale) {
  if (params.frames != 1) throw PreconditionError("generator_forward: network expects a frame stack");
  ad::Tape tape;
  return generator_graph(tape, {lr}, params, lr.height() * scale, lr.width() * scale, Binding::frozen).image();
}

Image generator_forward(const FrameStack& frames, const NetworkParams& params, Index scale) {
  ad::Tape tape;
  const Image& c = frames.center();
  return generator_graph(tape, frames.frames, params, c.height() * scale, c.width() * scale, Binding::frozen).image();
}

double discriminator_forward(const Image& img, const NetworkParams& params) {
  ad::Tape tape;
  const double p = discriminator_graph(tape, tape.constant(img), params, Binding::frozen).scalar();
  return std::clamp(p, kMinProbability, 1.0 - kMinProbability);
}

}  // namespace sasr
