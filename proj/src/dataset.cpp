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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace sasr {

namespace {

enum class Shape { rectangle, disc, line, texture };

struct Primitive {
  Shape shape;
  double x0, y0, x1, y1;  // bounding box, or segment endpoints for lines
  double radius;          // disc radius / half line width
  double value;
  double freq_x, freq_y, phase, amplitude;  // texture
};

struct Scene {
  double base, grad_x, grad_y;
  std::vector<Primitive> prims;
  std::vector<double> tint;  // per-channel multiplier
};

class Renderer {
 public:
  explicit Renderer(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Scene scene(double size, Index channels) {
    Scene s;
    s.base = uniform(0.2, 0.8);
    s.grad_x = uniform(-0.3, 0.3) / size;
    s.grad_y = uniform(-0.3, 0.3) / size;
    const int count = pick(4, 8);
    for (int n = 0; n < count; ++n) {
      Primitive p{};
      p.shape = static_cast<Shape>(pick(0, 3));
      p.value = uniform(0.0, 1.0);
      const double cx = uniform(0.0, size), cy = uniform(0.0, size);
      const double ext = uniform(0.1, 0.45) * size;
      p.x0 = cx - ext;
      p.x1 = cx + ext;
      p.y0 = cy - uniform(0.1, 0.45) * size;
      p.y1 = cy + uniform(0.1, 0.45) * size;
      p.radius = p.shape == Shape::line ? uniform(0.5, 2.0) : uniform(0.08, 0.3) * size;
      if (p.shape == Shape::line) {
        p.x0 = uniform(0.0, size);
        p.y0 = uniform(0.0, size);
        p.x1 = uniform(0.0, size);
        p.y1 = uniform(0.0, size);
      }
      const double period = uniform(3.0, 10.0);
      const double theta = uniform(0.0, std::numbers::pi);
      p.freq_x = 2.0 * std::numbers::pi * std::cos(theta) / period;
      p.freq_y = 2.0 * std::numbers::pi * std::sin(theta) / period;
      p.phase = uniform(0.0, 2.0 * std::numbers::pi);
      p.amplitude = uniform(0.15, 0.4);
      s.prims.push_back(p);
    }
    for (Index k = 0; k < channels; ++k) s.tint.push_back(channels == 1 ? 1.0 : uniform(0.6, 1.0));
    return s;
  }

 private:
  std::mt19937_64 rng_;
};

double segment_distance(double px, double py, const Primitive& p) {
  const double dx = p.x1 - p.x0, dy = p.y1 - p.y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - p.x0) * dx + (py - p.y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (p.x0 + t * dx), py - (p.y0 + t * dy));
}

double shade(const Scene& s, double x, double y) {
  double v = s.base + s.grad_x * x + s.grad_y * y;
  for (const auto& p : s.prims) {
    switch (p.shape) {
      case Shape::rectangle:
        if (x >= p.x0 && x < p.x1 && y >= p.y0 && y < p.y1) v = p.value;
        break;
      case Shape::disc: {
        const double cx = 0.5 * (p.x0 + p.x1), cy = 0.5 * (p.y0 + p.y1);
        if (std::hypot(x - cx, y - cy) < p.radius) v = p.value;
        break;
      }
      case Shape::line:
        if (segment_distance(x, y, p) < p.radius) v = p.value;
        break;
      case Shape::texture:
        if (x >= p.x0 && x < p.x1 && y >= p.y0 && y < p.y1)
          v = 0.5 + p.amplitude * std::sin(p.freq_x * x + p.freq_y * y + p.phase);
        break;
    }
  }
  return std::clamp(v, 0.0, 1.0);
}

// 4x4 supersampled rendering with the scene translated by (dx, dy).
Image render(const Scene& s, Index size, Index channels, double dx, double dy) {
  constexpr int kSub = 4;
  Image img(channels, size, size);
  for (Index i = 0; i < size; ++i)
    for (Index j = 0; j < size; ++j) {
      double acc = 0.0;
      for (int a = 0; a < kSub; ++a)
        for (int b = 0; b < kSub; ++b)
          acc += shade(s, static_cast<double>(j) + (b + 0.5) / kSub - dx, static_cast<double>(i) + (a + 0.5) / kSub - dy);
      const double v = acc / (kSub * kSub);
      for (Index k = 0; k < channels; ++k) img(k, i, j) = v * s.tint[static_cast<std::size_t>(k)];
    }
  return img;
}

}  // namespace

std::vector<Sample> make_synthetic_dataset(Index n, Index hr_size, Index scale, std::uint64_t seed, InputMode mode,
                                           Index channels) {
  if (n <= 0 || hr_size <= 0 || scale <= 0 || channels <= 0)
    throw PreconditionError("make_synthetic_dataset: sizes must be positive");
  if (hr_size % scale != 0) throw PreconditionError("make_synthetic_dataset: hr_size must be divisible by scale");
  Renderer r(seed);
  const Index lr_size = hr_size / scale;
  const Index frames = mode == InputMode::multi_frame ? kVideoFrames : 1;
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Index s = 0; s < n; ++s) {
    const Scene scene = r.scene(static_cast<double>(hr_size), channels);
    const double vx = frames > 1 ? r.uniform(-0.5, 0.5) * static_cast<double>(scale) : 0.0;
    const double vy = frames > 1 ? r.uniform(-0.5, 0.5) * static_cast<double>(scale) : 0.0;
    Sample sample;
    for (Index t = 0; t < frames; ++t) {
      const double offset = static_cast<double>(t - frames / 2);
      Image hr = render(scene, hr_size, channels, offset * vx, offset * vy);
      sample.lr_frames.push_back(resize_bicubic(hr, lr_size, lr_size));
      if (t == frames / 2) sample.hr = std::move(hr);
    }
    out.push_back(std::move(sample));
  }
  return out;
}

void attach_edge_maps(std::vector<Sample>& samples, const EdgeMapConfig& cfg) {
  for (auto& s : samples) s.edge = extract_edge_map(s.hr, cfg);
}

Datasets make_datasets(const TrainConfig& cfg, std::uint64_t data_seed) {
  Datasets d;
  d.train = make_synthetic_dataset(cfg.train_samples, cfg.hr_size, cfg.scale, data_seed, cfg.mode, cfg.channels);
  d.val = make_synthetic_dataset(cfg.val_samples, cfg.hr_size, cfg.scale, ~data_seed, cfg.mode, cfg.channels);
  attach_edge_maps(d.train, cfg.edge_cfg);
  attach_edge_maps(d.val, cfg.edge_cfg);
  return d;
}

}  // namespace sasr
