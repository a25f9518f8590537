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

#include "memory.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "test_util.hpp"

namespace mosseg {
namespace {

using testing::ErrorMessage;
using testing::Rng;

// 1-channel keys from scalars.
FlatKeySet Keys1(const std::vector<double>& k) {
  FlatKeySet s{1, static_cast<int>(k.size()), k, std::vector<KeyOrigin>(k.size())};
  for (std::size_t i = 0; i < k.size(); ++i) s.origin[i].position = static_cast<int>(i);
  return s;
}

ValueSet Values1(const std::vector<double>& v) { return {1, static_cast<int>(v.size()), v}; }

FlatKeySet RandomKeys(Rng& rng, int channels, int n) {
  FlatKeySet s{channels, n, {}, std::vector<KeyOrigin>(n)};
  for (int i = 0; i < channels * n; ++i) s.data.push_back(rng.Real(-1.0, 1.0));
  return s;
}

ValueSet RandomValues(Rng& rng, int channels, int n) {
  ValueSet v{channels, n, {}};
  for (int i = 0; i < channels * n; ++i) v.data.push_back(rng.Real(-5.0, 5.0));
  return v;
}

// Dense softmax over -||k - q||^2 in long double.
std::vector<long double> OracleColumn(const FlatKeySet& keys, std::span<const double> q,
                                      double scale) {
  std::vector<long double> s(keys.columns);
  for (int i = 0; i < keys.columns; ++i) {
    long double d = 0;
    for (int c = 0; c < keys.key_channels; ++c) {
      const long double diff = static_cast<long double>(keys.column(i)[c]) - q[c];
      d += diff * diff;
    }
    s[i] = -scale * d;
  }
  const long double m = *std::max_element(s.begin(), s.end());
  long double total = 0;
  for (auto& v : s) total += (v = std::exp(v - m));
  for (auto& v : s) v /= total;
  return s;
}

// ---- affinity ---------------------------------------------------------------

TEST(AffinityTest, SingleKeyEqualToQueryIsOne) {
  const auto w = Affinity(Keys1({0.3}), Keys1({0.3}));
  ASSERT_EQ(w.rows(), 1);
  ASSERT_EQ(w.cols(), 1);
  EXPECT_EQ(w.at(0, 0), 1.0);
}

TEST(AffinityTest, EquidistantKeysSplitEvenly) {
  const auto w = Affinity(Keys1({-1.0, 1.0}), Keys1({0.0}));
  EXPECT_DOUBLE_EQ(w.at(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(w.at(1, 0), 0.5);
}

TEST(AffinityTest, TwoKeysAgainstScalarSoftmax) {
  const auto w = Affinity(Keys1({0.0, 2.0}), Keys1({0.0}));
  const double e0 = std::exp(0.0);
  const double e4 = std::exp(-4.0);
  EXPECT_NEAR(w.at(0, 0), e0 / (e0 + e4), 1e-15);
  EXPECT_NEAR(w.at(1, 0), e4 / (e0 + e4), 1e-15);
  EXPECT_NEAR(w.at(0, 0), 0.9820, 5e-5);
  EXPECT_NEAR(w.at(1, 0), 0.0180, 5e-5);
}

TEST(AffinityTest, EmptyMemory) {
  EXPECT_EQ(ErrorMessage([] { Affinity(Keys1({}), Keys1({0.0})); }), "empty memory");
}

TEST(AffinityTest, ChannelMismatch) {
  FlatKeySet two{2, 1, {0.0, 0.0}, {{}}};
  EXPECT_THROW(Affinity(Keys1({0.0}), two), Error);
}

TEST(AffinityTest, TopKKeepsLargestWithLowerIndexTies) {
  // sims: -1, -1, -1, 0
  const AffinityOptions opts{2, 1.0, Similarity::kNegSquaredL2};
  const auto w = Affinity(Keys1({1.0, -1.0, 1.0, 0.0}), Keys1({0.0}), opts);
  const auto e = w.entries(0);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].row, 0);
  EXPECT_EQ(e[1].row, 3);
  const double a = std::exp(-1.0), b = 1.0;
  EXPECT_NEAR(e[0].weight, a / (a + b), 1e-15);
  EXPECT_NEAR(e[1].weight, b / (a + b), 1e-15);
  EXPECT_EQ(w.at(1, 0), 0.0);
  EXPECT_EQ(w.at(2, 0), 0.0);
}

TEST(AffinityTest, DotSimilarity) {
  const AffinityOptions opts{std::nullopt, 1.0, Similarity::kDot};
  const auto w = Affinity(Keys1({1.0, 2.0}), Keys1({1.0}), opts);
  EXPECT_NEAR(w.at(0, 0), 1.0 / (1.0 + std::exp(1.0)), 1e-15);
}

TEST(AffinityProperty, ColumnsAreDistributionsMatchingOracle) {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const int c = rng.Int(1, 6);
    const int n = rng.Int(1, 40);
    const int m = rng.Int(1, 8);
    const auto keys = RandomKeys(rng, c, n);
    const auto queries = RandomKeys(rng, c, m);
    const double scale = rng.Real(0.1, 60.0);
    AffinityOptions opts{std::nullopt, scale, Similarity::kNegSquaredL2};
    if (rng.Coin()) opts.top_k = rng.Int(1, n + 3);
    const auto w = Affinity(keys, queries, opts);
    ASSERT_EQ(w.rows(), n);
    ASSERT_EQ(w.cols(), m);
    for (int j = 0; j < m; ++j) {
      double sum = 0.0;
      for (const auto& e : w.entries(j)) {
        ASSERT_GE(e.weight, 0.0);
        sum += e.weight;
      }
      ASSERT_NEAR(sum, 1.0, 1e-6);
      if (opts.top_k) {
        ASSERT_LE(static_cast<int>(w.entries(j).size()), *opts.top_k);
      } else {
        const auto oracle = OracleColumn(keys, queries.column(j), scale);
        for (int i = 0; i < n; ++i)
          ASSERT_NEAR(w.at(i, j), static_cast<double>(oracle[i]), 1e-12);
      }
    }
  }
}

// ---- readout ----------------------------------------------------------------

TEST(ReadoutTest, WeightedSumExample) {
  AffinityMatrix w(2);
  const AffinityMatrix::Entry col[] = {{0, 0.25}, {1, 0.75}};
  w.AppendColumn(col);
  const auto out = ReadoutColumns(Values1({1.0, 3.0}), w);
  ASSERT_EQ(out.columns, 1);
  EXPECT_DOUBLE_EQ(out.data[0], 2.5);
}

TEST(ReadoutTest, ConstantValuesGiveConstant) {
  Rng rng(3);
  const auto keys = RandomKeys(rng, 3, 12);
  const auto w = Affinity(keys, RandomKeys(rng, 3, 6));
  ValueSet v{2, 12, {}};
  for (int i = 0; i < 12; ++i) v.data.insert(v.data.end(), {0.7, -2.0});
  const auto out = ReadoutColumns(v, w);
  for (int j = 0; j < 6; ++j) {
    EXPECT_NEAR(out.column(j)[0], 0.7, 1e-15);
    EXPECT_NEAR(out.column(j)[1], -2.0, 1e-15);
  }
}

TEST(ReadoutTest, OneHotSelects) {
  const auto values = Values1({4.0, 5.0, 6.0});
  AffinityMatrix w(3);
  for (int row : {2, 0, 1}) {
    const AffinityMatrix::Entry e[] = {{row, 1.0}};
    w.AppendColumn(e);
  }
  const auto grid = Readout(values, w, 1, 3);
  EXPECT_EQ(grid.at(0, 0, 0), 6.0);
  EXPECT_EQ(grid.at(0, 0, 1), 4.0);
  EXPECT_EQ(grid.at(0, 0, 2), 5.0);
}

TEST(ReadoutTest, DimensionMismatch) {
  AffinityMatrix w(3);
  EXPECT_THROW(ReadoutColumns(Values1({1.0, 2.0}), w), Error);
}

TEST(ReadoutProperty, ConvexHull) {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = rng.Int(1, 20), cv = rng.Int(1, 4);
    const auto keys = RandomKeys(rng, 2, n);
    const auto values = RandomValues(rng, cv, n);
    AffinityOptions opts{std::nullopt, rng.Real(0.5, 50.0), Similarity::kNegSquaredL2};
    if (rng.Coin()) opts.top_k = rng.Int(1, n);
    const auto out = ReadoutColumns(values, Affinity(keys, RandomKeys(rng, 2, 5), opts));
    for (int c = 0; c < cv; ++c) {
      double lo = INFINITY, hi = -INFINITY;
      for (int i = 0; i < n; ++i) {
        lo = std::min(lo, values.column(i)[c]);
        hi = std::max(hi, values.column(i)[c]);
      }
      for (int j = 0; j < out.columns; ++j) {
        ASSERT_GE(out.column(j)[c], lo - 1e-12);
        ASSERT_LE(out.column(j)[c], hi + 1e-12);
      }
    }
  }
}

// ---- usage ------------------------------------------------------------------

WorkingMemory MemoryWithFrames(int t_min, int t_max, const std::vector<int>& sizes) {
  WorkingMemory wm(t_min, t_max, 1);
  int f = 0;
  for (int n : sizes) {
    std::vector<double> k(n);
    std::iota(k.begin(), k.end(), static_cast<double>(10 * f));
    wm.AppendFrame(Keys1(k), Values1(k), f);
    ++f;
  }
  return wm;
}

std::vector<double> Usages(const WorkingMemory& wm) {
  std::vector<double> u;
  for (const auto& g : wm.groups()) u.insert(u.end(), g.usage.begin(), g.usage.end());
  return u;
}

TEST(RecordUsageTest, OneHotColumn) {
  auto wm = MemoryWithFrames(1, 3, {2});
  AffinityMatrix w(2);
  const AffinityMatrix::Entry e[] = {{0, 1.0}};
  w.AppendColumn(e);
  wm.RecordUsage(w);
  EXPECT_EQ(Usages(wm), (std::vector<double>{1.0, 0.0}));
}

TEST(RecordUsageTest, UniformOverFourQueries) {
  auto wm = MemoryWithFrames(1, 3, {2});
  AffinityMatrix w(2);
  const AffinityMatrix::Entry e[] = {{0, 0.5}, {1, 0.5}};
  for (int j = 0; j < 4; ++j) w.AppendColumn(e);
  wm.RecordUsage(w);
  EXPECT_EQ(Usages(wm), (std::vector<double>{0.5, 0.5}));
}

TEST(RecordUsageTest, SuccessiveReadsAccumulate) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = MemoryWithFrames(1, 4, {3, 2});
    auto b = a;
    const auto keys = a.groups()[0].keys;
    FlatKeySet all = keys;
    for (const auto& g : a.groups()) {
      if (&g == &a.groups()[0]) continue;
      all.data.insert(all.data.end(), g.keys.data.begin(), g.keys.data.end());
      all.origin.insert(all.origin.end(), g.keys.origin.begin(), g.keys.origin.end());
      all.columns += g.keys.columns;
    }
    const auto q1 = RandomKeys(rng, 1, 4), q2 = RandomKeys(rng, 1, 4);
    const auto w1 = Affinity(all, q1), w2 = Affinity(all, q2);
    a.RecordUsage(w1);
    a.RecordUsage(w2);
    // Same queries count, so the summed matrix is the column concatenation
    // with every weight counted at half the normalisation.
    AffinityMatrix both(all.columns);
    for (int j = 0; j < 4; ++j) both.AppendColumn(w1.entries(j));
    for (int j = 0; j < 4; ++j) both.AppendColumn(w2.entries(j));
    b.RecordUsage(both);
    const auto ua = Usages(a), ub = Usages(b);
    for (std::size_t i = 0; i < ua.size(); ++i) ASSERT_NEAR(ua[i], 2.0 * ub[i], 1e-14);
  }
}

TEST(RecordUsageProperty, TotalIncrementsByOne) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    auto wm = MemoryWithFrames(1, 5, {rng.Int(1, 6), rng.Int(1, 6), rng.Int(1, 6)});
    FlatKeySet all{1, 0, {}, {}};
    for (const auto& g : wm.groups()) {
      all.data.insert(all.data.end(), g.keys.data.begin(), g.keys.data.end());
      all.origin.insert(all.origin.end(), g.keys.origin.begin(), g.keys.origin.end());
      all.columns += g.keys.columns;
    }
    for (double& k : all.data) k /= 20.0;
    const auto before = Usages(wm);
    const double sum_before = std::accumulate(before.begin(), before.end(), 0.0);
    AffinityOptions opts;
    if (rng.Coin()) opts.top_k = rng.Int(1, 4);
    wm.RecordUsage(Affinity(all, RandomKeys(rng, 1, rng.Int(1, 9)), opts));
    const auto after = Usages(wm);
    ASSERT_NEAR(std::accumulate(after.begin(), after.end(), 0.0) - sum_before, 1.0, 1e-12);
    for (std::size_t i = 0; i < after.size(); ++i) ASSERT_GE(after[i], before[i]);
  }
}

// ---- working memory ---------------------------------------------------------

TEST(WorkingMemoryTest, AppendToFreshBank) {
  auto wm = MemoryWithFrames(1, 3, {4});
  EXPECT_EQ(wm.frame_count(), 1);
  EXPECT_EQ(wm.entry_count(), 4);
  EXPECT_EQ(Usages(wm), std::vector<double>(4, 0.0));
  EXPECT_EQ(wm.groups()[0].keys.origin[2], (KeyOrigin{0, 2}));
}

TEST(WorkingMemoryTest, BoundsValidated) {
  EXPECT_THROW(WorkingMemory(0, 3, 1), Error);
  EXPECT_THROW(WorkingMemory(3, 3, 1), Error);
  EXPECT_THROW(WorkingMemory(1, 3, 0), Error);
}

TEST(WorkingMemoryTest, AppendAtCapacityRefused) {
  auto wm = MemoryWithFrames(1, 2, {1, 1});
  EXPECT_THROW(wm.AppendFrame(Keys1({0.0}), Values1({0.0}), 9), Error);
}

TEST(ConsolidateTest, RetainsFirstAndNewest) {
  auto wm = MemoryWithFrames(3, 6, {2, 2, 2, 2, 2, 2});
  LongTermMemory ltm;
  ltm.prototypes_per_consolidation = 100;
  const int added = Consolidate(wm, ltm, {});
  ASSERT_EQ(wm.frame_count(), 3);
  EXPECT_EQ(wm.groups()[0].frame, 0);
  EXPECT_EQ(wm.groups()[1].frame, 4);
  EXPECT_EQ(wm.groups()[2].frame, 5);
  EXPECT_EQ(added, 6);
  ASSERT_EQ(ltm.size(), 6);
  std::vector<int> frames;
  for (const auto& o : ltm.keys.origin) frames.push_back(o.frame);
  std::sort(frames.begin(), frames.end());
  EXPECT_EQ(frames, (std::vector<int>{1, 1, 2, 2, 3, 3}));
}

TEST(ConsolidateTest, NotAtCapacity) {
  auto wm = MemoryWithFrames(3, 6, {1, 1, 1});
  LongTermMemory ltm;
  EXPECT_EQ(ErrorMessage([&] { Consolidate(wm, ltm, {}); }), "not at capacity");
}

TEST(ConsolidateTest, GrowthCappedAndMostUsedChosen) {
  auto wm = MemoryWithFrames(2, 4, {1, 3, 3, 1});
  // candidates are groups 1 and 2 (6 entries)
  const std::vector<double> u = {0.1, 0.9, 0.3, 0.8, 0.2, 0.05};
  int i = 0;
  for (int g = 1; g <= 2; ++g)
    for (auto& x : wm.mutable_groups()[g].usage) x = u[i++];
  LongTermMemory ltm;
  ltm.prototypes_per_consolidation = 2;
  EXPECT_EQ(Consolidate(wm, ltm, {}), 2);
  ASSERT_EQ(ltm.size(), 2);
  EXPECT_EQ(ltm.keys.origin[0], (KeyOrigin{1, 1}));
  EXPECT_EQ(ltm.keys.origin[1], (KeyOrigin{2, 0}));
  EXPECT_EQ(ltm.usage, (std::vector<double>{0.9, 0.8}));
}

TEST(ConsolidateTest, OverflowEvictsLowestUsage) {
  LongTermMemory ltm;
  ltm.capacity = 3;
  ltm.prototypes_per_consolidation = 2;
  auto wm = MemoryWithFrames(1, 2, {1, 2});
  wm.mutable_groups()[1].usage = {0.4, 0.7};
  Consolidate(wm, ltm, {});
  EXPECT_EQ(ltm.usage, (std::vector<double>{0.7, 0.4}));

  wm.AppendFrame(Keys1({50.0, 51.0}), Values1({50.0, 51.0}), 7);
  wm.mutable_groups()[1].usage = {0.5, 0.1};
  Consolidate(wm, ltm, {});
  ASSERT_EQ(ltm.size(), 3);
  // 0.1 dropped; survivors keep insertion order.
  EXPECT_EQ(ltm.usage, (std::vector<double>{0.7, 0.4, 0.5}));
  EXPECT_EQ(ltm.values.columns, 3);
  EXPECT_EQ(ltm.keys.origin[2].frame, 7);
}

TEST(ConsolidateTest, OverflowTiesKeepOlder) {
  LongTermMemory ltm;
  ltm.capacity = 2;
  ltm.prototypes_per_consolidation = 2;
  auto wm = MemoryWithFrames(1, 2, {1, 2});
  wm.mutable_groups()[1].usage = {0.5, 0.5};
  Consolidate(wm, ltm, {});
  wm.AppendFrame(Keys1({50.0}), Values1({50.0}), 7);
  wm.mutable_groups()[1].usage = {0.5};
  Consolidate(wm, ltm, {});
  ASSERT_EQ(ltm.size(), 2);
  EXPECT_EQ(ltm.keys.origin[0].frame, 1);
  EXPECT_EQ(ltm.keys.origin[1].frame, 1);
}

// ---- prototype selection ----------------------------------------------------

TEST(PrototypeSelectTest, Examples) {
  const std::vector<double> u = {0.5, 2.0, 1.0};
  EXPECT_EQ(PrototypeSelect(u, 2), (std::vector<int>{1, 2}));
  EXPECT_EQ(PrototypeSelect(u, 7), (std::vector<int>{1, 2, 0}));
  const std::vector<double> same(4, 1.0);
  EXPECT_EQ(PrototypeSelect(same, 4), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_TRUE(PrototypeSelect(std::vector<double>{}, 3).empty());
  EXPECT_THROW(PrototypeSelect(u, 0), Error);
}

TEST(PrototypeSelectTest, EntriesOverload) {
  std::vector<MemoryEntry> c(3);
  c[0].usage = 0.2;
  c[1].usage = 0.1;
  c[2].usage = 0.3;
  EXPECT_EQ(PrototypeSelect(c, 2), (std::vector<int>{2, 0}));
}

TEST(PrototypeSelectProperty, MatchesStableSortOracle) {
  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> u(rng.Int(0, 30));
    for (double& x : u) x = rng.Int(0, 5) * 0.25;  // plenty of ties
    const int p = rng.Int(1, 35);
    std::vector<int> oracle(u.size());
    std::iota(oracle.begin(), oracle.end(), 0);
    std::stable_sort(oracle.begin(), oracle.end(), [&](int a, int b) { return u[a] > u[b]; });
    oracle.resize(std::min<std::size_t>(oracle.size(), p));
    ASSERT_EQ(PrototypeSelect(u, p), oracle);
  }
}

// ---- potentiation -----------------------------------------------------------

TEST(PotentiateTest, SingleCandidateIsIdentity) {
  ValueSet v{3, 1, {0.1, -7.0, 2.5}};
  const auto out = Potentiate(Keys1({0.4}), v, Keys1({0.4}));
  EXPECT_EQ(out, v);
}

TEST(PotentiateTest, SymmetricCandidatesAverage) {
  const auto out = Potentiate(Keys1({-1.0, 1.0}), Values1({0.0, 2.0}), Keys1({0.0}));
  EXPECT_DOUBLE_EQ(out.data[0], 1.0);
}

TEST(PotentiateTest, ThreeCandidateExample) {
  const auto out =
      Potentiate(Keys1({0.0, 1.0, 4.0}), Values1({10.0, 20.0, 30.0}), Keys1({0.0}));
  const long double e0 = 1.0L, e1 = std::exp(-1.0L), e16 = std::exp(-16.0L);
  const long double t = e0 + e1 + e16;
  EXPECT_NEAR(static_cast<double>(e0 / t), 0.7311, 5e-5);
  EXPECT_NEAR(static_cast<double>(e1 / t), 0.2689, 5e-5);
  EXPECT_NEAR(static_cast<double>(e16 / t), 8.2e-8, 5e-9);
  const long double oracle = (10 * e0 + 20 * e1 + 30 * e16) / t;
  EXPECT_NEAR(out.data[0], static_cast<double>(oracle), 1e-13);
  EXPECT_NEAR(out.data[0], 12.69, 5e-3);
}

TEST(PotentiateTest, EmptyPrototypes) {
  const auto out = Potentiate(Keys1({0.0}), Values1({1.0}), Keys1({}));
  EXPECT_EQ(out.columns, 0);
  EXPECT_TRUE(out.data.empty());
}

TEST(PotentiateProperty, SelfSmoothingStaysInHull) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.Int(1, 15);
    const auto keys = RandomKeys(rng, 3, n);
    const auto values = RandomValues(rng, 2, n);
    const auto out = Potentiate(keys, values, keys);
    ASSERT_EQ(out.columns, n);
    for (int c = 0; c < 2; ++c) {
      double lo = INFINITY, hi = -INFINITY;
      for (int i = 0; i < n; ++i) {
        lo = std::min(lo, values.column(i)[c]);
        hi = std::max(hi, values.column(i)[c]);
      }
      for (int j = 0; j < n; ++j) {
        ASSERT_GE(out.column(j)[c], lo - 1e-12);
        ASSERT_LE(out.column(j)[c], hi + 1e-12);
      }
    }
  }
}

// ---- GRU --------------------------------------------------------------------

double Sig(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// Direct transcription of the gate equations, one unit at a time.
std::vector<double> OracleGru(const GruParams& p, const std::vector<double>& x,
                              const std::vector<double>& h) {
  const int ni = p.input_dim, nh = p.hidden_dim, row = ni + nh;
  std::vector<double> xh(x);
  xh.insert(xh.end(), h.begin(), h.end());
  std::vector<double> z(nh), rho(nh), out(nh);
  for (int i = 0; i < nh; ++i) {
    double az = p.b_update[i], ar = p.b_reset[i];
    for (int j = 0; j < row; ++j) {
      az += p.w_update[i * row + j] * xh[j];
      ar += p.w_reset[i * row + j] * xh[j];
    }
    z[i] = Sig(az);
    rho[i] = Sig(ar);
  }
  for (int i = 0; i < nh; ++i) {
    double a = p.b_candidate[i];
    for (int j = 0; j < ni; ++j) a += p.w_candidate[i * row + j] * x[j];
    for (int j = 0; j < nh; ++j) a += p.w_candidate[i * row + ni + j] * rho[j] * h[j];
    out[i] = (1 - z[i]) * h[i] + z[i] * std::tanh(a);
  }
  return out;
}

TEST(GruTest, ScalarHandExample) {
  const auto p = GruParams::Zeros(1, 1);
  const std::vector<double> x = {0.9}, h = {0.5};
  EXPECT_EQ(GruStep(p, x, h), std::vector<double>{0.25});
}

TEST(GruTest, ClosedGateKeepsState) {
  Rng rng(19);
  auto p = GruParams::Zeros(2, 3);
  for (double& w : p.w_candidate) w = rng.Real(-2.0, 2.0);
  p.b_update.assign(3, -50.0);
  const std::vector<double> x = {0.3, -0.8}, h = {0.1, -0.6, 0.95};
  const auto out = GruStep(p, x, h);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(out[i], h[i], 1e-20);
}

TEST(GruTest, OpenGateTakesCandidate) {
  auto p = GruParams::Zeros(1, 2);
  p.w_candidate = {1.5, 0.0, 0.0, -0.5, 0.0, 0.0};
  p.b_candidate = {0.2, 0.1};
  p.b_update.assign(2, 50.0);
  const std::vector<double> x = {0.4}, h = {0.7, -0.3};
  const auto out = GruStep(p, x, h);
  EXPECT_NEAR(out[0], std::tanh(1.5 * 0.4 + 0.2), 1e-15);
  EXPECT_NEAR(out[1], std::tanh(-0.5 * 0.4 + 0.1), 1e-15);
}

TEST(GruTest, ShapeMismatch) {
  const auto p = GruParams::Zeros(2, 2);
  const std::vector<double> x = {0.0}, h = {0.0, 0.0};
  EXPECT_THROW(GruStep(p, x, h), Error);
}

TEST(GruTest, SmootherIsMovingAverage) {
  const auto p = GruParams::Smoother(1, 0.3, 2.0);
  const std::vector<double> x = {0.75}, h = {0.2};
  const double cand = std::tanh(2.0 * (2 * 0.75 - 1));
  EXPECT_NEAR(GruStep(p, x, h)[0], 0.7 * 0.2 + 0.3 * cand, 1e-15);
  EXPECT_THROW(GruParams::Smoother(1, 1.0, 1.0), Error);
}

TEST(GruProperty, MatchesOracleAndStaysBounded) {
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const int ni = rng.Int(0, 4), nh = rng.Int(1, 4);
    auto p = GruParams::Zeros(ni, nh);
    const double mag = rng.Coin() ? 1.0 : 40.0;
    for (auto* v : {&p.w_update, &p.w_reset, &p.w_candidate, &p.b_update, &p.b_reset,
                    &p.b_candidate})
      for (double& w : *v) w = rng.Real(-mag, mag);
    std::vector<double> x(ni), h(nh);
    for (double& v : x) v = rng.Real(-3.0, 3.0);
    for (double& v : h) v = rng.Real(-0.999999, 0.999999);
    const auto out = GruStep(p, x, h);
    const auto oracle = OracleGru(p, x, h);
    for (int i = 0; i < nh; ++i) {
      ASSERT_GT(out[i], -1.0);
      ASSERT_LT(out[i], 1.0);
      ASSERT_NEAR(out[i], oracle[i], 1e-12);
    }
  }
}

TEST(SensoryTest, PerPositionStep) {
  SensoryState s{FeatureGrid(1, 2, 2, std::vector<double>{0.5, -0.5, 0.2, 0.0}),
                 GruParams::Zeros(1, 1), GruParams::Smoother(1, 0.5, 1.0)};
  SensoryUpdate(s, FeatureGrid(1, 2, 2));
  const auto h = s.h.data();
  EXPECT_EQ(std::vector<double>(h.begin(), h.end()), (std::vector<double>{0.25, -0.25, 0.1, 0.0}));
  SensoryDeepUpdate(s, FeatureGrid(1, 2, 2, 1.0));
  for (int i = 0; i < 4; ++i) EXPECT_GT(s.h.data()[i], -1.0);
  EXPECT_THROW(SensoryUpdate(s, FeatureGrid(1, 3, 2)), Error);
}

// ---- bank -------------------------------------------------------------------

MemoryConfig SmallConfig() {
  MemoryConfig cfg;
  cfg.t_min = 3;
  cfg.t_max = 6;
  cfg.prototypes = 2;
  cfg.ltm_capacity = 5;
  return cfg;
}

TEST(MemoryBankTest, AppendAtCapacityConsolidatesFirst) {
  MemoryBank bank(SmallConfig());
  for (int f = 0; f < 6; ++f)
    EXPECT_FALSE(bank.Append(Keys1({f * 1.0, f + 0.5}), Values1({1.0 * f, 2.0 * f}), f));
  EXPECT_FALSE(bank.last_consolidation());
  const auto added = bank.Append(Keys1({6.0, 6.5}), Values1({6.0, 12.0}), 6);
  ASSERT_TRUE(added);
  EXPECT_EQ(*added, 2);
  EXPECT_EQ(bank.working().frame_count(), 4);  // t_min + 1
  const auto& t = *bank.last_consolidation();
  EXPECT_EQ(t.working_before, 6);
  EXPECT_EQ(t.working_after, 3);
  EXPECT_EQ(t.ltm_before, 0);
  EXPECT_EQ(t.ltm_after, 2);
  EXPECT_EQ(t.first_group_frame, 0);
  EXPECT_EQ(bank.AllKeys().columns, 8 + 2);
  EXPECT_EQ(bank.AllValues().columns, 10);
}

TEST(MemoryBankProperty, BoundsHoldOverLongRuns) {
  Rng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    MemoryConfig cfg;
    cfg.t_min = rng.Int(1, 4);
    cfg.t_max = cfg.t_min + rng.Int(1, 4);
    cfg.prototypes = rng.Int(1, 4);
    cfg.ltm_capacity = rng.Int(1, 10);
    MemoryBank bank(cfg);
    for (int f = 0; f < 60; ++f) {
      const int n = 3;
      const int ltm_before = bank.long_term().size();
      const auto added = bank.Append(RandomKeys(rng, 2, n), RandomValues(rng, 1, n), f);
      if (bank.working().entry_count() > 0) {
        const auto w = bank.Read(RandomKeys(rng, 2, 4));
        bank.RecordUsage(w);
      }
      ASSERT_GE(bank.working().frame_count(), 1);
      ASSERT_LE(bank.working().frame_count(), cfg.t_max);
      ASSERT_EQ(bank.working().groups().front().frame, 0);
      ASSERT_LE(bank.long_term().size(), cfg.ltm_capacity);
      if (added) {
        ASSERT_EQ(bank.last_consolidation()->working_after, cfg.t_min);
        ASSERT_LE(*added, cfg.prototypes);
        ASSERT_LE(bank.long_term().size(), ltm_before + cfg.prototypes);
      }
    }
  }
}

TEST(MemoryBankTest, SerializeRoundTrip) {
  Rng rng(31);
  MemoryConfig cfg = SmallConfig();
  cfg.top_k = 4;
  cfg.affinity_scale = 12.5;
  MemoryBank bank(cfg);
  for (int f = 0; f < 9; ++f) {
    bank.Append(RandomKeys(rng, 2, 3), RandomValues(rng, 2, 3), f * 5);
    bank.RecordUsage(bank.Read(RandomKeys(rng, 2, 2)));
  }
  std::stringstream ss;
  bank.Serialize(ss);
  const auto back = MemoryBank::Deserialize(ss);
  EXPECT_EQ(back.config().t_min, cfg.t_min);
  EXPECT_EQ(back.config().top_k, cfg.top_k);
  EXPECT_EQ(back.config().affinity_scale, cfg.affinity_scale);
  ASSERT_EQ(back.working().frame_count(), bank.working().frame_count());
  for (int g = 0; g < bank.working().frame_count(); ++g) {
    const auto& a = bank.working().groups()[g];
    const auto& b = back.working().groups()[g];
    EXPECT_EQ(a.frame, b.frame);
    EXPECT_EQ(a.keys, b.keys);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.usage, b.usage);
  }
  EXPECT_EQ(back.long_term().keys, bank.long_term().keys);
  EXPECT_EQ(back.long_term().values, bank.long_term().values);
  EXPECT_EQ(back.long_term().usage, bank.long_term().usage);
  EXPECT_EQ(back.long_term().capacity, bank.long_term().capacity);

  std::stringstream bad("not a snapshot");
  EXPECT_THROW(MemoryBank::Deserialize(bad), Error);
}

TEST(MemoryConfigTest, Validate) {
  MemoryConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.t_min = cfg.t_max;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.top_k = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.affinity_scale = 0.0;
  EXPECT_THROW(MemoryBank{cfg}, Error);
}

}  // namespace
}  // namespace mosseg
