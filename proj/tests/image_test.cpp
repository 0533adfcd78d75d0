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

#include "sasr/image.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sasr;

TEST(Image, ConstructorAndIndexing) {
  Image img(2, 3, 4, 0.25);
  EXPECT_EQ(img.channels(), 2);
  EXPECT_EQ(img.height(), 3);
  EXPECT_EQ(img.width(), 4);
  EXPECT_EQ(img.size(), 24);
  img(1, 2, 3) = 7.0;
  EXPECT_EQ(img.data()(1, 2 * 4 + 3), 7.0);
  EXPECT_EQ(img.channel(1)(2, 3), 7.0);
  EXPECT_THROW(Image(0, 3, 3), PreconditionError);
  EXPECT_THROW(Image(2, 2, Matrix::Zero(1, 5)), DimensionError);
}

TEST(Image, FrameStackRequiresOddLength) {
  const Image a(1, 2, 2);
  EXPECT_THROW(FrameStack({a, a}), PreconditionError);
  EXPECT_THROW(FrameStack({a, Image(1, 3, 2), a}), DimensionError);
  FrameStack s({Image(1, 2, 2, 0.0), Image(1, 2, 2, 1.0), Image(1, 2, 2, 2.0)});
  EXPECT_EQ(s.center()(0, 0, 0), 1.0);
}

TEST(Image, ReflectPadTwoByTwo) {
  Image img(1, 2, 2);
  img(0, 0, 0) = 1;  // a
  img(0, 0, 1) = 2;  // b
  img(0, 1, 0) = 3;  // c
  img(0, 1, 1) = 4;  // d
  const Image p = pad(img, PaddingPolicy::uniform(1));
  const double expect[4][4] = {{4, 3, 4, 3}, {2, 1, 2, 1}, {4, 3, 4, 3}, {2, 1, 2, 1}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(p(0, i, j), expect[i][j]) << i << "," << j;
}

TEST(Image, PadMatchesFoldOracle) {
  std::mt19937_64 rng(3);
  for (PadMode mode : {PadMode::reflect, PadMode::replicate}) {
    const Image img = oracle::random_image(rng, 2, 5, 4);
    const Image p = pad(img, {mode, 3, 2});
    ASSERT_EQ(p.height(), 11);
    ASSERT_EQ(p.width(), 8);
    for (Index k = 0; k < 2; ++k)
      for (Index i = 0; i < 11; ++i)
        for (Index j = 0; j < 8; ++j)
          EXPECT_EQ(p(k, i, j), img(k, oracle::fold(i - 3, 5, mode), oracle::fold(j - 2, 4, mode)));
  }
}

TEST(Image, PadThenCropIsIdentity) {
  std::mt19937_64 rng(4);
  const Image img = oracle::random_image(rng, 3, 6, 7);
  for (PadMode mode : {PadMode::reflect, PadMode::replicate})
    EXPECT_EQ(crop(pad(img, {mode, 2, 3}), 2, 3, 6, 7), img);
}

TEST(Image, PadAndCropPreconditions) {
  const Image img(1, 3, 3);
  EXPECT_THROW(pad(img, PaddingPolicy::uniform(3)), PreconditionError);
  EXPECT_NO_THROW(pad(img, PaddingPolicy::uniform(5, PadMode::replicate)));
  EXPECT_THROW(pad(img, {PadMode::reflect, -1, 0}), PreconditionError);
  EXPECT_THROW(crop(img, 1, 1, 3, 1), PreconditionError);
}

TEST(Image, Luminance) {
  Image rgb(3, 1, 2);
  rgb(0, 0, 0) = 1.0;
  rgb(1, 0, 1) = 1.0;
  const Image y = to_luminance(rgb);
  ASSERT_EQ(y.channels(), 1);
  EXPECT_DOUBLE_EQ(y(0, 0, 0), 0.299);
  EXPECT_DOUBLE_EQ(y(0, 0, 1), 0.587);
  EXPECT_THROW(to_luminance(Image(2, 1, 1)), PreconditionError);
  const Image g = broadcast_channels(y, 3);
  EXPECT_EQ(g.channels(), 3);
  EXPECT_EQ(g(2, 0, 1), y(0, 0, 1));
}

TEST(Image, CubicKernelInterpolates) {
  EXPECT_EQ(cubic_kernel(0.0), 1.0);
  EXPECT_EQ(cubic_kernel(1.0), 0.0);
  EXPECT_EQ(cubic_kernel(2.0), 0.0);
  EXPECT_DOUBLE_EQ(cubic_kernel(0.5), 0.5625);
  EXPECT_DOUBLE_EQ(cubic_kernel(1.5), -0.0625);
  for (double t : {0.0, 0.1, 0.37, 0.5, 0.9})
    EXPECT_NEAR(cubic_kernel(t + 1) + cubic_kernel(t) + cubic_kernel(1 - t) + cubic_kernel(2 - t), 1.0, 1e-15);
}

TEST(Image, BicubicPreservesConstants) {
  const Image c = Image::constant(2, 5, 7, 0.3);
  const Image up = resize_bicubic(c, 13, 9);
  EXPECT_NEAR((up.data().array() - 0.3).abs().maxCoeff(), 0.0, 1e-15);
  const Image down = bicubic_resize(c, 0.5);
  EXPECT_EQ(down.height(), 3);
  EXPECT_EQ(down.width(), 4);
  EXPECT_NEAR((down.data().array() - 0.3).abs().maxCoeff(), 0.0, 1e-15);
}

TEST(Image, BicubicSameSizeIsIdentity) {
  std::mt19937_64 rng(5);
  const Image img = oracle::random_image(rng, 2, 6, 5);
  EXPECT_NEAR((resize_bicubic(img, 6, 5).data() - img.data()).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Image, BicubicReproducesRampInInterior) {
  const Index n = 8;
  Image ramp(1, 1, n);
  for (Index j = 0; j < n; ++j) ramp(0, 0, j) = static_cast<double>(j);
  const Image up = resize_bicubic(ramp, 1, 2 * n);
  for (Index o = 0; o < 2 * n; ++o) {
    const double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    if (std::floor(src) - 1 < 0 || std::floor(src) + 2 > n - 1) continue;
    EXPECT_NEAR(up(0, 0, o), src, 1e-14) << o;
  }
}

TEST(Image, ScaledExtent) {
  EXPECT_EQ(scaled_extent(48, 0.5), 24);
  EXPECT_EQ(scaled_extent(3, 0.25), 1);
  EXPECT_THROW(scaled_extent(3, 0.0), PreconditionError);
}
