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

#include "sasr/metrics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sasr;

TEST(Psnr, IdenticalImagesHitCap) {
  std::mt19937_64 rng(91);
  const Image a = oracle::random_image(rng, 3, 5, 5);
  EXPECT_EQ(psnr(a, a), 100.0);
  Image b = a;
  b(0, 0, 0) += 1e-12;
  EXPECT_EQ(psnr(a, b), 100.0);
}

TEST(Psnr, UniformDifference) {
  std::mt19937_64 rng(92);
  const Image a = oracle::random_image(rng, 1, 16, 16, 0.2, 0.8);
  Image b = a;
  b.data().array() += 0.1;
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
  double prev = 101.0;
  for (double d : {0.01, 0.02, 0.05, 0.1, 0.3}) {
    Image c = a;
    c.data().array() += d;
    const double p = psnr(a, c);
    EXPECT_LT(p, prev);
    prev = p;
  }
  EXPECT_THROW(psnr(a, Image(1, 16, 15)), DimensionError);
}

TEST(Ssim, IdenticalIsExactlyOne) {
  std::mt19937_64 rng(93);
  for (Index k : {1, 3}) {
    const Image a = oracle::random_image(rng, k, 13, 17);
    EXPECT_EQ(ssim(a, a), 1.0);
  }
}

TEST(Ssim, ConstantPairClosedForm) {
  const double expect = (2 * 0.3 * 0.5 + 1e-4) / (0.3 * 0.3 + 0.5 * 0.5 + 1e-4);
  EXPECT_NEAR(ssim(Image::constant(1, 12, 12, 0.3), Image::constant(1, 12, 12, 0.5)), expect, 1e-9);
  EXPECT_NEAR(expect, 0.3001 / 0.3401, 1e-15);
}

TEST(Ssim, SymmetricAndBounded) {
  std::mt19937_64 rng(94);
  for (int t = 0; t < 10; ++t) {
    const Image a = oracle::random_image(rng, 1, 12, 14);
    const Image b = oracle::random_image(rng, 1, 12, 14);
    const double s = ssim(a, b);
    EXPECT_NEAR(s, ssim(b, a), 1e-15);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
  }
  Image neg = oracle::random_image(rng, 1, 12, 12);
  Image inv = neg;
  inv.data() = (1.0 - neg.data().array()).matrix();
  EXPECT_LT(ssim(neg, inv), 0.0);
  EXPECT_THROW(ssim(Image(1, 10, 12), Image(1, 10, 12)), PreconditionError);
}

TEST(EdgeRegionMae, Buckets) {
  Image hr(1, 1, 4), sr(1, 1, 4), w(1, 1, 4);
  const double err[4] = {0.1, 0.2, 0.3, 0.4};
  const double wv[4] = {0.2, 0.5, 0.9, 0.0};
  for (Index j = 0; j < 4; ++j) {
    sr(0, 0, j) = err[j];
    w(0, 0, j) = wv[j];
  }
  const RegionError r = edge_region_mae(hr, sr, w, 0.5);
  EXPECT_EQ(r.edge_count, 2);
  EXPECT_EQ(r.flat_count, 2);
  EXPECT_NEAR(r.edge_mae, 0.25, 1e-15);
  EXPECT_NEAR(r.flat_mae, 0.25, 1e-15);
  const RegionError all_flat = edge_region_mae(hr, sr, w, 1.0);
  EXPECT_EQ(all_flat.edge_mae, kEmptyRegion);
  EXPECT_NEAR(all_flat.flat_mae, 0.25, 1e-15);
  EXPECT_THROW(edge_region_mae(hr, sr, w, 1.5), PreconditionError);
}

TEST(Evaluate, Composes) {
  std::mt19937_64 rng(95);
  const Image hr = oracle::random_image(rng, 1, 12, 12);
  const Image sr = oracle::random_image(rng, 1, 12, 12);
  const Image w = oracle::random_image(rng, 1, 12, 12);
  const MetricReport m = evaluate(hr, sr, w, 0.5);
  EXPECT_EQ(m.psnr_db, psnr(hr, sr));
  EXPECT_EQ(m.ssim, ssim(hr, sr));
  EXPECT_EQ(m.edge_mae, edge_region_mae(hr, sr, w, 0.5).edge_mae);
}
