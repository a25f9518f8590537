/* Copyright 2026 The mosseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "grid.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "error.hpp"
#include "test_util.hpp"

namespace mosseg {
namespace {

using testing::Rng;

// Scalar bilinear reference, half-pixel centres, edge clamped.
double ScalarBilinear(const FeatureGrid& g, int c, int out_h, int out_w, int y, int x) {
  auto coord = [](int o, int in, int out) {
    double s = (o + 0.5) * in / out - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in - 1));
  };
  const double sy = coord(y, g.height(), out_h);
  const double sx = coord(x, g.width(), out_w);
  const int y0 = static_cast<int>(std::floor(sy));
  const int x0 = static_cast<int>(std::floor(sx));
  const int y1 = std::min(y0 + 1, g.height() - 1);
  const int x1 = std::min(x0 + 1, g.width() - 1);
  const double fy = sy - y0, fx = sx - x0;
  return (1 - fy) * (1 - fx) * g.at(c, y0, x0) + (1 - fy) * fx * g.at(c, y0, x1) +
         fy * (1 - fx) * g.at(c, y1, x0) + fy * fx * g.at(c, y1, x1);
}

TEST(FeatureGridTest, LayoutIsChannelPlanes) {
  FeatureGrid g(2, 2, 3);
  g.at(1, 1, 2) = 5.0;
  EXPECT_EQ(g.size(), 12u);
  EXPECT_EQ(g.data()[1 * 6 + 1 * 3 + 2], 5.0);
  EXPECT_EQ(g.plane(1)[5], 5.0);
  EXPECT_THROW(FeatureGrid(2, 2, 2, std::vector<double>(7)), Error);
}

TEST(ResizeBilinearTest, ConstantStaysConstant) {
  FeatureGrid g(2, 5, 7, 7.0);
  for (auto [h, w] : {std::pair{1, 1}, {3, 9}, {10, 14}, {480, 3}}) {
    const FeatureGrid r = ResizeBilinear(g, h, w);
    ASSERT_EQ(r.height(), h);
    ASSERT_EQ(r.width(), w);
    for (double v : r.data()) EXPECT_EQ(v, 7.0);
  }
}

TEST(ResizeBilinearTest, SameDimsIsBitIdentical) {
  Rng rng(1);
  const FeatureGrid g = testing::RandomGrid(rng, 3, 6, 5);
  EXPECT_EQ(ResizeBilinear(g, 6, 5), g);
}

TEST(ResizeBilinearTest, TwoByTwoToTwoByThree) {
  const FeatureGrid g(1, 2, 2, {0.0, 2.0, 0.0, 2.0});
  const FeatureGrid r = ResizeBilinear(g, 2, 3);
  for (int y = 0; y < 2; ++y) {
    EXPECT_DOUBLE_EQ(r.at(0, y, 0), 0.0);
    EXPECT_DOUBLE_EQ(r.at(0, y, 1), 1.0);
    EXPECT_DOUBLE_EQ(r.at(0, y, 2), 2.0);
  }
}

TEST(ResizeBilinearTest, MatchesScalarReferenceOnRandomGrids) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const FeatureGrid g =
        testing::RandomGrid(rng, rng.Int(1, 3), rng.Int(1, 9), rng.Int(1, 9), -5, 5);
    const int h = rng.Int(1, 17), w = rng.Int(1, 17);
    const FeatureGrid r = ResizeBilinear(g, h, w);
    for (int c = 0; c < g.channels(); ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          ASSERT_NEAR(r.at(c, y, x), ScalarBilinear(g, c, h, w, y, x), 1e-12);
  }
}

TEST(ResizeBilinearTest, LinearRampStaysMonotone) {
  FeatureGrid g(1, 1, 8);
  for (int x = 0; x < 8; ++x) g.at(0, 0, x) = 3.0 * x;
  for (int w : {3, 8, 13, 31}) {
    const FeatureGrid r = ResizeBilinear(g, 2, w);
    for (int x = 1; x < w; ++x) EXPECT_GE(r.at(0, 0, x), r.at(0, 0, x - 1));
  }
}

TEST(ResizeBilinearTest, EmptyGridFails) {
  try {
    ResizeBilinear(FeatureGrid(), 2, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty grid");
  }
  EXPECT_THROW(ResizeBilinear(FeatureGrid(1, 2, 2), 0, 2), Error);
}

TEST(FlattenTest, Examples) {
  const FlatKeySet a = Flatten(FeatureGrid(1, 1, 2, {3.0, 5.0}), 4);
  EXPECT_EQ(a.columns, 2);
  EXPECT_EQ(a.key_channels, 1);
  EXPECT_EQ(a.column(0)[0], 3.0);
  EXPECT_EQ(a.column(1)[0], 5.0);
  EXPECT_EQ(a.origin[1], (KeyOrigin{4, 1}));

  const FlatKeySet b = Flatten(FeatureGrid(2, 1, 1, {1.5, -2.0}));
  EXPECT_EQ(b.columns, 1);
  EXPECT_EQ(b.column(0)[0], 1.5);
  EXPECT_EQ(b.column(0)[1], -2.0);
}

TEST(FlattenTest, RoundTripProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int c = rng.Int(1, 8), h = rng.Int(1, 8), w = rng.Int(1, 8);
    const FeatureGrid g = testing::RandomGrid(rng, c, h, w);
    const FlatKeySet k = Flatten(g, trial);
    ASSERT_EQ(k.columns, h * w);
    ASSERT_EQ(static_cast<int>(k.origin.size()), h * w);
    const int j = rng.Int(0, h * w - 1);
    for (int ch = 0; ch < c; ++ch) ASSERT_EQ(k.column(j)[ch], g.at(ch, j / w, j % w));
    ASSERT_EQ(Unflatten(k, h, w), g);
  }
}

TEST(MaskMapTest, LabelsAreArgmaxWithLowerTieBreak) {
  // Two objects with equal probability at pixel 0: the lower id wins.
  const MaskMap m = MaskMap::FromProbs(1, 2, {1, 3}, {0.2, 0.6, 0.4, 0.2, 0.4, 0.2});
  EXPECT_EQ(m.label(0, 0), 1);
  EXPECT_EQ(m.label(0, 1), 0);
  EXPECT_TRUE(m.IsConsistent());
  const MaskMap tie = MaskMap::FromProbs(1, 1, {2}, {0.5, 0.5});
  EXPECT_EQ(tie.label(0, 0), 0);
}

TEST(MaskMapTest, FromLabelsIsOneHotAndConsistent) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = rng.Int(1, 12), w = rng.Int(1, 12);
    const MaskMap m = MaskMap::FromLabels(h, w, testing::RandomLabels(rng, h, w, 5));
    ASSERT_TRUE(m.IsConsistent(1e-12));
    for (int p = 0; p < m.num_pixels(); ++p) {
      double sum = 0.0;
      for (int k = 0; k < m.num_planes(); ++k) sum += m.prob_plane(k)[p];
      ASSERT_EQ(sum, 1.0);
    }
  }
}

TEST(MaskMapTest, GapsInLabelsAreKept) {
  const MaskMap m = MaskMap::FromLabels(1, 3, {0, 1, 3});
  EXPECT_EQ(m.object_ids(), (std::vector<int>{1, 3}));
  EXPECT_EQ(m.PlaneOf(3), 2);
  EXPECT_EQ(m.PlaneOf(2), -1);
}

TEST(ResizeNearestTest, NeverIntroducesLabels) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = rng.Int(1, 20), w = rng.Int(1, 20);
    const MaskMap m = MaskMap::FromLabels(h, w, testing::RandomLabels(rng, h, w, 6));
    const MaskMap r = ResizeNearest(m, rng.Int(1, 40), rng.Int(1, 40));
    const std::set<int> before(m.labels().begin(), m.labels().end());
    const std::set<int> after(r.labels().begin(), r.labels().end());
    for (int v : after) ASSERT_TRUE(before.count(v)) << v;
    ASSERT_TRUE(r.IsConsistent());
  }
}

}  // namespace
}  // namespace mosseg
