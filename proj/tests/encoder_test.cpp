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

#include "encoder.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "error.hpp"
#include "test_util.hpp"

namespace mosseg {
namespace {

using testing::Rng;

GrayImage MirrorX(const GrayImage& img) {
  GrayImage out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.at(0, y, x) = img.at(0, y, img.width() - 1 - x);
  return out;
}

TEST(EncoderTest, ConstantImageHasOnlyMeanAndCoordinates) {
  const EncoderConfig cfg;
  const FeatureGrid raw = EncodeRaw(GrayImage(1, 16, 16, 200.0), cfg);
  ASSERT_EQ(raw.channels(), cfg.feature_channels);
  ASSERT_EQ(raw.height(), 4);
  for (int c = 0; c < raw.channels(); ++c) {
    const bool may_be_nonzero = c == kMeanChannel || c == RowChannel(cfg) || c == ColChannel(cfg);
    for (double v : raw.plane(c)) {
      if (!may_be_nonzero) EXPECT_EQ(v, 0.0) << "channel " << c;
    }
  }
  EXPECT_NEAR(raw.at(kMeanChannel, 1, 1), 200.0 / 255.0 - 0.5, 1e-15);
  EXPECT_NE(raw.at(RowChannel(cfg), 0, 0), 0.0);
}

TEST(EncoderTest, MirrorPermutesOrientationBins) {
  Rng rng(10);
  EncoderConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    cfg.stride = 1 << rng.Int(0, 3);
    const int h = cfg.stride * rng.Int(1, 4), w = cfg.stride * rng.Int(1, 4);
    const GrayImage img = testing::RandomImage(rng, h, w);
    const FeatureGrid a = EncodeRaw(img, cfg);
    const FeatureGrid b = EncodeRaw(MirrorX(img), cfg);
    const int cw = a.width();
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < cw; ++x) {
        const int mx = cw - 1 - x;
        EXPECT_NEAR(b.at(kMeanChannel, y, mx), a.at(kMeanChannel, y, x), 1e-12);
        EXPECT_NEAR(b.at(kVarianceChannel, y, mx), a.at(kVarianceChannel, y, x), 1e-12);
        EXPECT_NEAR(b.at(LaplacianChannel(cfg), y, mx), a.at(LaplacianChannel(cfg), y, x), 1e-12);
        EXPECT_NEAR(b.at(RowChannel(cfg), y, mx), a.at(RowChannel(cfg), y, x), 1e-12);
        EXPECT_NEAR(b.at(ColChannel(cfg), y, mx), -a.at(ColChannel(cfg), y, x), 1e-12);
        for (int k = 0; k < cfg.gradient_bins; ++k) {
          const int mk = MirroredBin(k, cfg.gradient_bins);
          EXPECT_NEAR(b.at(kFirstGradientChannel + mk, y, mx), a.at(kFirstGradientChannel + k, y, x),
                      1e-12);
        }
      }
    }
  }
}

TEST(EncoderTest, TranslationCovarianceAtStride) {
  Rng rng(11);
  EncoderConfig cfg;
  cfg.coord_weight = 0.0;
  const int s = cfg.stride;
  const GrayImage img = testing::RandomImage(rng, 32, 32);
  GrayImage shifted = testing::RandomImage(rng, 32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = s; x < 32; ++x) shifted.at(0, y, x) = img.at(0, y, x - s);
  const FeatureGrid a = EncodeRaw(img, cfg);
  const FeatureGrid b = EncodeRaw(shifted, cfg);
  for (int c = 0; c < a.channels(); ++c)
    for (int y = 1; y < a.height() - 1; ++y)
      for (int x = 2; x < a.width() - 1; ++x) ASSERT_EQ(b.at(c, y, x), a.at(c, y, x - 1));
}

TEST(EncoderTest, Deterministic) {
  Rng rng(12);
  const GrayImage img = testing::RandomImage(rng, 30, 22);
  const EncoderConfig cfg;
  const QueryEncoding a = EncodeQuery(img, cfg);
  const QueryEncoding b = EncodeQuery(img, cfg);
  EXPECT_EQ(a.keys, b.keys);
  EXPECT_EQ(a.feat, b.feat);
  EXPECT_EQ(a.feat.height(), 8);  // 30 padded to 32
  EXPECT_EQ(a.feat.width(), 6);
}

TEST(EncoderTest, KeysAreUnitOrZero) {
  Rng rng(13);
  const QueryEncoding q = EncodeQuery(testing::RandomImage(rng, 16, 16), EncoderConfig{});
  for (int j = 0; j < q.keys.columns; ++j) {
    double sq = 0.0;
    for (double v : q.keys.column(j)) sq += v * v;
    EXPECT_NEAR(sq, 1.0, 1e-12);
  }
  const FeatureGrid z = NormalizePositions(FeatureGrid(3, 2, 2, 0.0));
  for (double v : z.data()) EXPECT_EQ(v, 0.0);
}

TEST(EncoderTest, InvalidImages) {
  GrayImage bad(1, 4, 4, 1.0);
  bad.at(0, 1, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    EncodeRaw(bad, EncoderConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "invalid image");
  }
  EncoderConfig odd;
  odd.stride = 3;
  EXPECT_THROW(EncodeRaw(GrayImage(1, 6, 6), odd), Error);
}

TEST(EncodeValueTest, FullEmptyAndHalfCells) {
  const EncoderConfig cfg;  // stride 4
  const FeatureGrid feat(cfg.feature_channels, 2, 2, 0.25);
  const MaskMap full = MaskMap::FromLabels(8, 8, std::vector<std::uint8_t>(64, 1));
  const FeatureGrid v = EncodeValue(feat, full, 1, cfg);
  ASSERT_EQ(v.channels(), cfg.feature_channels + 1);
  for (double x : v.plane(cfg.feature_channels)) EXPECT_EQ(x, 1.0);
  for (double x : v.plane(0)) EXPECT_EQ(x, 0.25);

  const MaskMap none = MaskMap::FromLabels(8, 8, std::vector<std::uint8_t>(64, 0), {1});
  for (double x : EncodeValue(feat, none, 1, cfg).plane(cfg.feature_channels)) EXPECT_EQ(x, 0.0);

  // Left half of the top-left cell.
  const MaskMap half = testing::RectMask(8, 8, 0, 0, 3, 1);
  EXPECT_EQ(EncodeValue(feat, half, 1, cfg).at(cfg.feature_channels, 0, 0), 0.5);

  try {
    EncodeValue(feat, half, 2, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "unknown object");
  }
}

TEST(EncodeValueTest, MatchesBlockAverage) {
  Rng rng(14);
  EncoderConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    cfg.stride = 1 << rng.Int(0, 3);
    const int ch = rng.Int(1, 4), cw = rng.Int(1, 4);
    const int h = ch * cfg.stride, w = cw * cfg.stride;
    const MaskMap m = MaskMap::FromLabels(h, w, testing::RandomLabels(rng, h, w, 2), {1, 2});
    const FeatureGrid v = EncodeValues(FeatureGrid(cfg.feature_channels, ch, cw), m, {1, 2}, cfg);
    for (int k = 0; k < 2; ++k) {
      for (int cy = 0; cy < ch; ++cy) {
        for (int cx = 0; cx < cw; ++cx) {
          int count = 0;
          for (int y = cy * cfg.stride; y < (cy + 1) * cfg.stride; ++y)
            for (int x = cx * cfg.stride; x < (cx + 1) * cfg.stride; ++x) count += m.label(y, x) == k + 1;
          ASSERT_DOUBLE_EQ(v.at(cfg.feature_channels + k, cy, cx),
                           static_cast<double>(count) / (cfg.stride * cfg.stride));
        }
      }
    }
  }
}

TEST(AdapterTest, Examples) {
  Rng rng(15);
  const FeatureGrid x = testing::RandomGrid(rng, 4, 3, 5);
  AdapterParams p = AdapterParams::Zero(4, 0.0);
  for (double& v : p.map) v = rng.Real(-1, 1);
  for (double& v : p.bias) v = rng.Real(-1, 1);
  EXPECT_EQ(AdapterApply(x, p), x);

  EXPECT_EQ(AdapterApply(x, AdapterParams::Zero(4, 3.7)), x);

  const FeatureGrid twice = AdapterApply(x, AdapterParams::Identity(4, 1.0));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(twice.data()[i], 2.0 * x.data()[i]);

  EXPECT_THROW(AdapterApply(x, AdapterParams::Zero(3, 1.0)), Error);
}

TEST(AdapterTest, AlphaZeroQueryIsBitExact) {
  Rng rng(16);
  const EncoderConfig cfg;
  AdapterParams p = AdapterParams::Zero(cfg.feature_channels, 0.0);
  for (double& v : p.map) v = rng.Real(-1, 1);
  const GrayImage img = testing::RandomImage(rng, 20, 20);
  const QueryEncoding a = EncodeQuery(img, cfg);
  const QueryEncoding b = EncodeQuery(img, cfg, &p);
  EXPECT_EQ(a.keys, b.keys);
  EXPECT_EQ(a.feat, b.feat);
}

TEST(AdapterTest, LinearInAlpha) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = rng.Int(1, 6);
    const FeatureGrid x = testing::RandomGrid(rng, c, 3, 3);
    AdapterParams p = AdapterParams::Zero(c, 0.0);
    for (double& v : p.map) v = rng.Real(-2, 2);
    for (double& v : p.bias) v = rng.Real(-2, 2);
    auto at = [&](double a) {
      p.alpha = a;
      return AdapterApply(x, p);
    };
    const FeatureGrid o0 = at(0.0), oh = at(0.5), o1 = at(1.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d0 = o0.data()[i] - x.data()[i];
      const double dh = oh.data()[i] - x.data()[i];
      const double d1 = o1.data()[i] - x.data()[i];
      ASSERT_EQ(d0, 0.0);
      ASSERT_NEAR(dh, 0.5 * d1, 1e-9);
    }
  }
}

TEST(FitAdapterTest, SingleChannelNormalEquations) {
  const FeatureGrid src(1, 1, 2, {1.0, 2.0});
  const FeatureGrid dst(1, 1, 2, {2.0, 4.0});
  for (double lambda : {1e-6, 0.5, 3.0}) {
    const AdapterParams p = FitAdapter({{src, dst}}, 1.0, lambda);
    // [5 + l, 3; 3, 2] [m; b] = [5; 3]
    const double det = 2.0 * (5.0 + lambda) - 9.0;
    EXPECT_NEAR(p.map[0], (2.0 * 5.0 - 3.0 * 3.0) / det, 1e-12);
    EXPECT_NEAR(p.bias[0], ((5.0 + lambda) * 3.0 - 3.0 * 5.0) / det, 1e-12);
  }
  const AdapterParams tiny = FitAdapter({{src, dst}}, 1.0, 1e-6);
  EXPECT_NEAR(tiny.map[0], 1.0, 1e-5);
  EXPECT_NEAR(tiny.bias[0], 0.0, 1e-5);
}

TEST(FitAdapterTest, ZeroResidualAndRidgeLimit) {
  Rng rng(18);
  const FeatureGrid a = testing::RandomGrid(rng, 5, 4, 4);
  const FeatureGrid b = testing::RandomGrid(rng, 5, 4, 4);
  const AdapterParams same = FitAdapter({{a, a}}, 0.7, 1e-3);
  EXPECT_LT(same.MapNorm(), 1e-12);
  for (double v : same.bias) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_LT(FitAdapter({{a, b}}, 1.0, 1e9).MapNorm(), 1e-6);
}

TEST(FitAdapterTest, NeverWorseThanUnadapted) {
  Rng rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    const int c = rng.Int(1, 6);
    std::vector<std::pair<FeatureGrid, FeatureGrid>> pairs;
    for (int k = rng.Int(1, 3); k > 0; --k)
      pairs.emplace_back(testing::RandomGrid(rng, c, 3, 4), testing::RandomGrid(rng, c, 3, 4));
    const double alpha = rng.Coin() ? rng.Real(0.1, 2.0) : -rng.Real(0.1, 2.0);
    const AdapterParams fit = FitAdapter(pairs, alpha, rng.Real(1e-6, 10.0));
    EXPECT_EQ(fit.alpha, alpha);
    EXPECT_LE(AdapterObjective(pairs, fit),
              AdapterObjective(pairs, AdapterParams::Zero(c, alpha)) * (1 + 1e-12));
  }
}

TEST(FitAdapterTest, Errors) {
  const FeatureGrid g(2, 2, 2, 1.0);
  try {
    FitAdapter({{g, g}}, 0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "alpha must be nonzero to fit");
  }
  EXPECT_THROW(FitAdapter({}, 1.0, 1.0), Error);
  EXPECT_THROW(FitAdapter({{g, g}}, 1.0, 0.0), Error);
  EXPECT_THROW(FitAdapter({{g, FeatureGrid(2, 2, 3)}}, 1.0, 1.0), Error);
}

}  // namespace
}  // namespace mosseg
