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

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sasr;

namespace {

void zero_weights(NetworkParams& p) {
  for (auto& l : p.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

}  // namespace

TEST(Generator, Shapes) {
  const NetworkParams g = make_generator(3, 5, 1);
  ASSERT_EQ(g.layers.size(), static_cast<std::size_t>(2 + 2 * kResidualBlocks));
  EXPECT_EQ(g.layers.front().weight.cols(), 3 * 5 * 9);
  EXPECT_EQ(g.layers.back().weight.rows(), 3);
  EXPECT_EQ(g.parameter_count(), (16 * 135 + 16) + 4 * (16 * 144 + 16) + (3 * 144 + 3));
  EXPECT_THROW(make_generator(0, 1, 1), PreconditionError);
}

TEST(Generator, SeedDeterminesWeights) {
  const NetworkParams a = make_generator(1, 1, 9), b = make_generator(1, 1, 9), c = make_generator(1, 1, 10);
  EXPECT_EQ(a.layers[1].weight, b.layers[1].weight);
  EXPECT_NE(a.layers[1].weight, c.layers[1].weight);
  EXPECT_TRUE(a.all_finite());
}

TEST(Generator, ZeroWeightsGiveBicubicUpscale) {
  std::mt19937_64 rng(81);
  NetworkParams g = make_generator(2, 1, 1);
  zero_weights(g);
  const Image lr = oracle::random_image(rng, 2, 6, 5);
  const Image sr = generator_forward(lr, g, 3);
  EXPECT_EQ(sr, resize_bicubic(lr, 18, 15));

  NetworkParams gv = make_generator(1, 5, 1);
  zero_weights(gv);
  std::vector<Image> frames;
  for (int t = 0; t < 5; ++t) frames.push_back(oracle::random_image(rng, 1, 4, 4));
  EXPECT_EQ(generator_forward(FrameStack(frames), gv, 2), resize_bicubic(frames[2], 8, 8));
  EXPECT_THROW(generator_forward(frames[0], gv, 2), PreconditionError);
}

TEST(Generator, FirstLayerMatchesLoopOracle) {
  std::mt19937_64 rng(82);
  NetworkParams g = make_generator(1, 1, 3);
  const Image lr = oracle::random_image(rng, 1, 4, 4);
  // Head conv only; the tail copies feature 0.
  for (std::size_t i = 1; i < g.layers.size(); ++i) {
    g.layers[i].weight.setZero();
    g.layers[i].bias.setZero();
  }
  g.layers.back().weight(0, 0 * 9 + 4) = 1.0;
  const Image up = resize_bicubic(lr, 8, 8);
  Image head = oracle::conv3x3(up, g.layers[0].weight, g.layers[0].bias, 1);
  head.data() = head.data().cwiseMax(0.0);
  const Image sr = generator_forward(lr, g, 2);
  EXPECT_LT((sr.data() - (up.data() + head.data().row(0))).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Discriminator, MinimumInput) {
  EXPECT_THROW(make_discriminator(1, 4, 8, 1), PreconditionError);
  EXPECT_THROW(make_discriminator(1, 8, 4, 1), PreconditionError);
  const NetworkParams d = make_discriminator(1, 5, 5, 1);
  EXPECT_EQ(d.layers.back().weight.cols(), 32);
  EXPECT_EQ(make_discriminator(1, 48, 48, 1).layers.back().weight.cols(), 32 * 6 * 6);
}

TEST(Discriminator, OutputIsProbability) {
  std::mt19937_64 rng(83);
  const NetworkParams d = make_discriminator(3, 8, 8, 4);
  for (int t = 0; t < 5; ++t) {
    const double p = discriminator_forward(oracle::random_image(rng, 3, 8, 8), d);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  NetworkParams z = d;
  zero_weights(z);
  EXPECT_EQ(discriminator_forward(Image(3, 8, 8, 0.3), z), 0.5);
  EXPECT_THROW(discriminator_forward(Image(3, 8, 9), d), DimensionError);
  EXPECT_THROW(discriminator_forward(Image(1, 8, 8), d), DimensionError);
}

TEST(FeatureExtractor, ShapesAndZeros) {
  const FeatureExtractor fx(3, kDefaultFeatureSeed);
  const Image f = fx(Image(3, 9, 7, 0.5));
  EXPECT_EQ(f.channels(), 16);
  EXPECT_EQ(f.height(), 3);
  EXPECT_EQ(f.width(), 2);
  EXPECT_TRUE((FeatureExtractor::zeros(3)(Image(3, 9, 7, 0.5)).data().array() == 0.0).all());
  EXPECT_THROW(fx(Image(1, 9, 7)), DimensionError);
}

TEST(NetworkParams, GradientHelpers) {
  NetworkParams g = make_generator(1, 1, 1);
  g.layers[0].weight_grad.setConstant(2.0);
  g.scale_grad(0.25);
  EXPECT_EQ(g.layers[0].weight_grad(0, 0), 0.5);
  g.zero_grad();
  EXPECT_EQ(g.layers[0].weight_grad.cwiseAbs().maxCoeff(), 0.0);
}
