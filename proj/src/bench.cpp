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

#include "bench.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "encoder.hpp"
#include "error.hpp"
#include "memory.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "png_io.hpp"
#include "propagator.hpp"
#include "synth_spec.hpp"
#include "synthgen.hpp"

namespace mosseg {

namespace fs = std::filesystem;

void Digest::Add(const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h_ ^= p[i];
    h_ *= 1099511628211ull;
  }
}

void Digest::Add(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  Add(&bits, sizeof(bits));
}

void Digest::Add(std::int64_t v) { Add(&v, sizeof(v)); }

void Digest::Add(const MaskMap& m) {
  Add(static_cast<std::int64_t>(m.height()));
  Add(static_cast<std::int64_t>(m.width()));
  for (int id : m.object_ids()) Add(static_cast<std::int64_t>(id));
  Add(m.labels().data(), m.labels().size());
  for (int k = 0; k < m.num_planes() && !m.empty(); ++k)
    for (double v : m.prob_plane(k)) Add(v);
}

std::string Digest::Hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h_));
  return buf;
}

std::string FormatCriterion(const CriterionResult& r) {
  return std::string(r.passed ? "PASS " : "FAIL ") + r.name + "  " + r.detail;
}

namespace {

using Clock = std::chrono::steady_clock;

CriterionResult Named(const char* name) {
  CriterionResult r;
  r.name = name;
  return r;
}

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// Independent region oracle: plain pixel count.
double BruteJaccard(const MaskMap& a, const MaskMap& b, int id) {
  long inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const bool pa = a.label(y, x) == id;
      const bool pb = b.label(y, x) == id;
      if (pa && pb) ++inter;
      if (pa || pb) ++uni;
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Independent contour oracle: explicit boundary lists and an all-pairs
// distance test instead of dilation.
std::vector<std::pair<int, int>> BruteBoundary(const MaskMap& m, int id) {
  auto in = [&](int y, int x) {
    return y >= 0 && x >= 0 && y < m.height() && x < m.width() && m.label(y, x) == id;
  };
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (in(y, x) && !(in(y - 1, x) && in(y + 1, x) && in(y, x - 1) && in(y, x + 1)))
        out.emplace_back(y, x);
  return out;
}

double BruteBoundaryF(const MaskMap& pred, const MaskMap& gt, int id, double tol) {
  const auto pb = BruteBoundary(pred, id);
  const auto gb = BruteBoundary(gt, id);
  if (pb.empty() && gb.empty()) return 1.0;
  if (pb.empty() || gb.empty()) return 0.0;
  auto matched = [&](const std::vector<std::pair<int, int>>& from,
                     const std::vector<std::pair<int, int>>& to) {
    long hits = 0;
    for (const auto& [y, x] : from) {
      for (const auto& [v, u] : to) {
        const int dy = y - v, dx = x - u;
        if (dy * dy + dx * dx <= tol * tol) {
          ++hits;
          break;
        }
      }
    }
    return static_cast<double>(hits) / static_cast<double>(from.size());
  };
  const double p = matched(pb, gb);
  const double r = matched(gb, pb);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

// Per-frame mean Jaccard over the annotation's objects.
double FrameJ(const MaskMap& pred, const MaskMap& ref) {
  double j = 0.0;
  for (int id : ref.object_ids()) j += BruteJaccard(pred, ref, id);
  return j / static_cast<double>(ref.object_ids().size());
}

}  // namespace

// ---------------------------------------------------------------------------

CriterionResult CheckMemoryAlgebra() {
  CriterionResult r = Named("memory_algebra");
  const auto t0 = Clock::now();
  Digest dg;
  std::mt19937_64 rng(0x5eed0001);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  int bad_sum = 0, bad_neg = 0, bad_hull = 0, bad_topk = 0;
  double worst_sum = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int c = pick(1, 8), n = pick(1, 40), q = pick(1, 12), cv = pick(1, 5);
    FlatKeySet keys{c, n, {}, std::vector<KeyOrigin>(n)};
    FlatKeySet queries{c, q, {}, std::vector<KeyOrigin>(q)};
    for (int i = 0; i < c * n; ++i) keys.data.push_back(u(rng));
    for (int i = 0; i < c * q; ++i) queries.data.push_back(u(rng));
    AffinityOptions opts;
    if (pick(0, 1)) opts.top_k = pick(1, n + 3);
    opts.scale = std::exp(std::uniform_real_distribution<double>(std::log(0.1), std::log(500.0))(rng));
    opts.similarity = pick(0, 3) == 0 ? Similarity::kDot : Similarity::kNegSquaredL2;
    const AffinityMatrix w = Affinity(keys, queries, opts);

    ValueSet values{cv, n, {}};
    for (int i = 0; i < cv * n; ++i) values.data.push_back(100.0 * u(rng));
    const ValueSet f = ReadoutColumns(values, w);

    for (int j = 0; j < q; ++j) {
      const auto col = w.DenseColumn(j);
      double sum = 0.0;
      int nonzero = 0;
      for (double v : col) {
        if (v < 0.0 || !std::isfinite(v)) ++bad_neg;
        sum += v;
        nonzero += v != 0.0;
        dg.Add(v);
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      if (std::abs(sum - 1.0) > 1e-6) ++bad_sum;
      if (opts.top_k && nonzero > *opts.top_k) ++bad_topk;
      for (int ch = 0; ch < cv; ++ch) {
        double lo = INFINITY, hi = -INFINITY;
        for (int i = 0; i < n; ++i) {
          lo = std::min(lo, values.column(i)[ch]);
          hi = std::max(hi, values.column(i)[ch]);
        }
        const double v = f.column(j)[ch];
        const double slack = 1e-9 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
        if (v < lo - slack || v > hi + slack) ++bad_hull;
        dg.Add(v);
      }
    }
  }

  // One candidate: the single weight is exactly 1, so v^p is v^c bit for bit.
  int bad_identity = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int c = pick(1, 8), cv = pick(1, 5), p = pick(1, 4);
    FlatKeySet ck{c, 1, {}, {KeyOrigin{}}};
    for (int i = 0; i < c; ++i) ck.data.push_back(u(rng));
    FlatKeySet pk{c, p, {}, std::vector<KeyOrigin>(p)};
    for (int j = 0; j < p; ++j) {
      for (int i = 0; i < c; ++i) pk.data.push_back(j == 0 ? ck.data[i] : u(rng));
    }
    ValueSet cvals{cv, 1, {}};
    for (int i = 0; i < cv; ++i) cvals.data.push_back(100.0 * u(rng));
    const ValueSet out = Potentiate(ck, cvals, pk, {std::nullopt, 37.0, Similarity::kNegSquaredL2});
    for (int j = 0; j < p; ++j)
      for (int i = 0; i < cv; ++i)
        if (out.column(j)[i] != cvals.data[i]) ++bad_identity;
  }

  // Keys {0, 1, 4}, values {10, 20, 30}, prototype key 0.
  const FlatKeySet ck{1, 3, {0.0, 1.0, 4.0}, std::vector<KeyOrigin>(3)};
  const ValueSet cvals{1, 3, {10.0, 20.0, 30.0}};
  const FlatKeySet pk{1, 1, {0.0}, {KeyOrigin{}}};
  const double engine = Potentiate(ck, cvals, pk, {std::nullopt, 1.0, Similarity::kNegSquaredL2})
                            .column(0)[0];
  long double num = 0.0L, den = 0.0L;
  for (int i = 0; i < 3; ++i) {
    const long double d = ck.data[i] * ck.data[i];
    num += std::exp(-d) * cvals.data[i];
    den += std::exp(-d);
  }
  const double oracle = static_cast<double>(num / den);
  const double example_err = std::abs(engine - oracle);
  dg.Add(engine);

  r.seconds = Since(t0);
  r.passed = bad_sum == 0 && bad_neg == 0 && bad_hull == 0 && bad_topk == 0 &&
             bad_identity == 0 && example_err <= 1e-9 && r.seconds < 5.0;
  r.detail = Fmt(
      "1000 trials: max|colsum-1|=%.2e neg=%d hull=%d topk=%d; single-candidate mismatches=%d; "
      "three-candidate v=%.12f oracle=%.12f err=%.1e; %.2fs (limit 5s)",
      worst_sum, bad_neg, bad_hull, bad_topk, bad_identity, engine, oracle, example_err,
      r.seconds);
  r.digest = dg.Hex();
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult CheckConsolidationTrace() {
  CriterionResult r = Named("consolidation_trace");
  const auto t0 = Clock::now();
  Digest dg;

  SceneSpec spec;
  spec.frames = 200;
  spec.background = Background::kNoise;
  spec.noise_sigma = 3.0;
  spec.seed = 11;
  ObjectSpec o;
  o.cx = 20.0;
  o.vx = 0.1;
  o.vy = 0.02;
  spec.objects = {o};
  const SyntheticSequence seq = Generate(spec);

  PropagationConfig cfg;
  cfg.memory.r = 5;
  cfg.memory.t_min = 5;
  cfg.memory.t_max = 10;
  cfg.memory.prototypes = 32;

  Session s(seq.frames[0], seq.masks[0], cfg);
  int max_wm = s.bank().working().frame_count();
  int events = 0, bad_after = 0, bad_growth = 0, missing_first = 0, over = 0;
  std::size_t seen_events = 0;
  for (int f = 1; f < spec.frames; ++f) {
    const MaskMap m = s.Step(seq.frames[f], f);
    dg.Add(m);
    const auto& wm = s.bank().working();
    max_wm = std::max(max_wm, wm.frame_count());
    if (wm.frame_count() > cfg.memory.t_max || wm.frame_count() < 1) ++over;
    if (wm.groups().front().frame != 0) ++missing_first;
    if (s.events().size() > seen_events) {
      seen_events = s.events().size();
      ++events;
      const auto& t = *s.bank().last_consolidation();
      if (t.working_before != cfg.memory.t_max || t.working_after != cfg.memory.t_min ||
          t.first_group_frame != 0)
        ++bad_after;
      if (t.ltm_after - t.ltm_before > cfg.memory.prototypes || t.prototypes > cfg.memory.prototypes)
        ++bad_growth;
      dg.Add(static_cast<std::int64_t>(t.ltm_after));
      dg.Add(static_cast<std::int64_t>(f));
    }
  }
  r.seconds = Since(t0);
  r.passed = events > 0 && over == 0 && bad_after == 0 && bad_growth == 0 &&
             missing_first == 0 && r.seconds < 30.0;
  r.detail = Fmt(
      "200 frames, %d consolidations: max working=%d (limit 10), wrong post-consolidation "
      "count=%d, group-0 missing=%d, ltm growth > 32: %d, final ltm=%d; %.2fs (limit 30s)",
      events, max_wm, bad_after, missing_first, bad_growth, s.bank().long_term().size(),
      r.seconds);
  r.digest = dg.Hex();
  return r;
}

// ---------------------------------------------------------------------------

std::string TrackingSpecText() {
  return "kind=scene\n"
         "height=64\n"
         "width=64\n"
         "frames=20\n"
         "seed=0\n"
         "background=uniform\n"
         "background_level=50\n"
         "objects=1\n"
         "object.1.shape=disk\n"
         "object.1.cx=32\n"
         "object.1.cy=32\n"
         "object.1.radius=8\n"
         "object.1.intensity=200\n"
         "object.1.vx=1\n"
         "object.1.vy=0\n"
         "annotated=0\n";
}

std::string TrackingConfigText() {
  return "stride=2\n"
         "direction=forward\n"
         "resolution=native\n";
}

namespace {

struct TrackingNumbers {
  double j = 0.0;
  double f = 0.0;
};

TrackingNumbers& LastTracking() {
  static TrackingNumbers numbers;
  return numbers;
}

}  // namespace

CriterionResult CheckTracking() {
  CriterionResult r = Named("tracking_vs_oracle");
  const auto t0 = Clock::now();
  Digest dg;
  const SynthJob job = ParseSynthSpec(TrackingSpecText());
  const RunConfig cfg = ParseRunConfig(TrackingConfigText());
  const SyntheticSequence seq = job.Generate(0);
  const int h = job.scene.height, w = job.scene.width;

  const SessionResult res = Run(seq.frames, 0, seq.masks[0], cfg.propagation);
  const SequenceReport rep =
      EvaluateSequence(res.masks, seq.masks, {1}, {0}, DefaultBoundaryTolerance(h, w));
  const auto oracle = OracleTrack(job.scene, seq.frames, seq.masks[0], 0);
  double oracle_min = 1.0;
  for (std::size_t t = 0; t < oracle.size(); ++t)
    oracle_min = std::min(oracle_min, BruteJaccard(oracle[t], seq.masks[t], 1));
  for (const auto& m : res.masks) dg.Add(m);
  dg.Add(rep.j.mean);
  dg.Add(rep.f.mean);
  LastTracking() = {rep.j.mean, rep.f.mean};

  r.seconds = Since(t0);
  r.passed = rep.j.mean >= 0.90 && rep.f.mean >= 0.90 && oracle_min == 1.0 && r.seconds < 10.0;
  r.detail = Fmt("mean J=%.4f mean F=%.4f (need >= 0.90), oracle min J=%.4f (need 1.0); "
                 "%.2fs (limit 10s)",
                 rep.j.mean, rep.f.mean, oracle_min, r.seconds);
  r.digest = dg.Hex();
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult CheckStaticFixedPoint() {
  CriterionResult r = Named("static_fixed_point");
  const auto t0 = Clock::now();
  Digest dg;
  SceneSpec spec;
  spec.height = 32;
  spec.width = 32;
  spec.frames = 20;
  spec.background = Background::kGradient;
  ObjectSpec disk;
  disk.id = 1;
  disk.cx = 11;
  disk.cy = 12;
  disk.radius = 6;
  ObjectSpec rect;
  rect.id = 2;
  rect.shape = Shape::kRectangle;
  rect.cx = 22;
  rect.cy = 21;
  rect.half_width = 5;
  rect.half_height = 4;
  rect.intensity = 130;
  spec.objects = {disk, rect};
  const SyntheticSequence seq = Generate(spec);

  PropagationConfig cfg;
  cfg.encoder.stride = 1;
  const SessionResult res = Run(seq.frames, 0, seq.masks[0], cfg);
  double min_j = 1.0;
  for (std::size_t t = 1; t < res.masks.size(); ++t) {
    min_j = std::min(min_j, FrameJ(res.masks[t], seq.masks[0]));
    dg.Add(res.masks[t]);
  }
  bool identical_frames = true;
  for (const auto& f : seq.frames) identical_frames = identical_frames && f == seq.frames[0];
  r.seconds = Since(t0);
  r.passed = identical_frames && min_j >= 0.99;
  r.detail = Fmt("20 identical frames, 2 objects, stride 1: min J vs annotation=%.4f "
                 "(need >= 0.99); %.2fs",
                 min_j, r.seconds);
  r.digest = dg.Hex();
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult CheckBidirectionalIdentity() {
  CriterionResult r = Named("bidirectional_identity");
  const auto t0 = Clock::now();
  Digest dg;
  int mismatched_frames = 0, mismatched_events = 0, total_events = 0;
  for (int scene = 0; scene < 5; ++scene) {
    std::mt19937_64 rng(0xb1d1 + scene);
    auto real = [&](double lo, double hi) {
      return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    SceneSpec spec;
    spec.frames = 16;
    spec.seed = static_cast<std::uint64_t>(scene);
    spec.background = static_cast<Background>(pick(0, 2));
    spec.noise_sigma = pick(0, 1) ? 4.0 : 0.0;
    const int objects = pick(1, 2);
    for (int k = 0; k < objects; ++k) {
      ObjectSpec o;
      o.id = k + 1;
      o.shape = static_cast<Shape>(pick(0, 2));
      o.cx = real(22, 42);
      o.cy = real(22, 42);
      o.radius = real(5, 7);
      o.half_width = real(4, 7);
      o.half_height = real(3, 6);
      o.intensity = real(120, 230);
      o.vx = real(-0.35, 0.35);
      o.vy = real(-0.35, 0.35);
      spec.objects.push_back(o);
    }
    const SyntheticSequence seq = Generate(spec);
    const int n = spec.frames;
    const int a = pick(n / 2, n - 1);

    PropagationConfig cfg;
    cfg.memory.t_min = 2;
    cfg.memory.t_max = 3;
    cfg.memory.r = 2;
    cfg.direction = Direction::kBackward;
    const SessionResult back = Run(seq.frames, a, seq.masks[a], cfg);

    std::vector<GrayImage> reversed(seq.frames.rbegin(), seq.frames.rend());
    cfg.direction = Direction::kForward;
    const SessionResult fwd = Run(reversed, n - 1 - a, seq.masks[a], cfg);

    for (int f = 0; f < n; ++f) {
      if (!(back.masks[f] == fwd.masks[n - 1 - f])) ++mismatched_frames;
      dg.Add(back.masks[f]);
    }
    total_events += static_cast<int>(back.events.size());
    if (back.events.size() != fwd.events.size()) {
      ++mismatched_events;
    } else {
      for (std::size_t i = 0; i < back.events.size(); ++i)
        if (back.events[i].frame != n - 1 - fwd.events[i].frame ||
            back.events[i].prototypes != fwd.events[i].prototypes)
          ++mismatched_events;
    }
  }
  r.seconds = Since(t0);
  r.passed = mismatched_frames == 0 && mismatched_events == 0;
  r.detail = Fmt("5 random scenes: mismatched masks=%d, mismatched consolidation events=%d "
                 "(of %d); %.2fs",
                 mismatched_frames, mismatched_events, total_events, r.seconds);
  r.digest = dg.Hex();
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult CheckVolumePropagation() {
  CriterionResult r = Named("volume_propagation");
  const auto t0 = Clock::now();
  Digest dg;
  const VolumeSpec spec;
  const SyntheticSequence vol = GenerateVolume(spec);
  PropagationConfig cfg;
  cfg.encoder.stride = 2;
  cfg.direction = Direction::kBoth;
  const int mid = spec.depth / 2;
  const SessionResult res = Run(vol.frames, mid, vol.masks[mid], cfg);

  int scored = 0, failing = 0, worst_slice = -1;
  double min_j = 1.0;
  for (int z = 0; z < spec.depth; ++z) {
    dg.Add(res.masks[z]);
    const auto axes = SliceSemiAxes(spec, z);
    if (!axes || std::numbers::pi * axes->first * axes->second < 20.0) continue;
    ++scored;
    const double j = BruteJaccard(res.masks[z], vol.masks[z], 1);
    if (j < min_j) {
      min_j = j;
      worst_slice = z;
    }
    if (j < 0.85) ++failing;
  }
  r.seconds = Since(t0);
  r.passed = scored > 0 && failing == 0;
  r.detail = Fmt("64^3 ellipsoid from slice %d, both directions, stride 2: %d slices with "
                 "area >= 20, min J=%.4f at slice %d (need >= 0.85), failing=%d; %.2fs",
                 mid, scored, min_j, worst_slice, failing, r.seconds);
  r.digest = dg.Hex();
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult CheckMetricOracle() {
  CriterionResult r = Named("metric_oracle");
  const auto t0 = Clock::now();
  Digest dg;
  std::mt19937_64 rng(0x3e7c);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const double tols[] = {0.0, 1.0, 1.5, 2.0, 3.0};

  auto random_mask = [&](int h, int w) {
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(h) * w, 0);
    const int blobs = pick(0, 4);
    for (int b = 0; b < blobs; ++b) {
      const std::uint8_t id = static_cast<std::uint8_t>(pick(1, 2));
      const int cy = pick(0, h - 1), cx = pick(0, w - 1), ry = pick(0, h / 2), rx = pick(0, w / 2);
      const bool disk = pick(0, 1);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double dy = ry ? double(y - cy) / ry : (y == cy ? 0.0 : 2.0);
          const double dx = rx ? double(x - cx) / rx : (x == cx ? 0.0 : 2.0);
          if (disk ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0)
            labels[static_cast<std::size_t>(y) * w + x] = id;
        }
    }
    const int flips = pick(0, 6);
    for (int k = 0; k < flips; ++k)
      labels[pick(0, h * w - 1)] = static_cast<std::uint8_t>(pick(0, 2));
    return labels;
  };

  int j_mismatch = 0, f_mismatch = 0;
  double worst_f = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int h = pick(1, 40), w = pick(1, 40);
    const MaskMap gt = MaskMap::FromLabels(h, w, random_mask(h, w), {1, 2});
    MaskMap pred;
    if (pick(0, 1)) {
      pred = MaskMap::FromLabels(h, w, random_mask(h, w), {1, 2});
    } else {
      // Shifted copy of the ground truth with a little label noise.
      const int sy = pick(-2, 2), sx = pick(-2, 2);
      std::vector<std::uint8_t> labels(static_cast<std::size_t>(h) * w, 0);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const int yy = y - sy, xx = x - sx;
          if (yy >= 0 && xx >= 0 && yy < h && xx < w)
            labels[static_cast<std::size_t>(y) * w + x] = gt.label(yy, xx);
        }
      for (int k = pick(0, 3); k > 0; --k)
        labels[pick(0, h * w - 1)] = static_cast<std::uint8_t>(pick(0, 2));
      pred = MaskMap::FromLabels(h, w, std::move(labels), {1, 2});
    }
    const double tol = tols[pick(0, 4)];
    for (int id : {1, 2}) {
      const double j = Jaccard(pred, gt, id);
      const double f = BoundaryF(pred, gt, id, tol);
      if (j != BruteJaccard(pred, gt, id)) ++j_mismatch;
      const double df = std::abs(f - BruteBoundaryF(pred, gt, id, tol));
      worst_f = std::max(worst_f, df);
      if (df > 1e-12) ++f_mismatch;
      dg.Add(j);
      dg.Add(f);
    }
  }
  r.seconds = Since(t0);
  r.passed = j_mismatch == 0 && f_mismatch == 0;
  r.detail = Fmt("100 random mask pairs x 2 objects: J mismatches=%d (exact), F mismatches=%d, "
                 "max |dF|=%.1e (tol 1e-12); %.2fs",
                 j_mismatch, f_mismatch, worst_f, r.seconds);
  r.digest = dg.Hex();
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult CheckAdapterLaws() {
  CriterionResult r = Named("adapter_laws");
  const auto t0 = Clock::now();
  Digest dg;
  const EncoderConfig enc;
  std::mt19937_64 rng(0xada9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  auto scene_frame = [&](std::uint64_t seed) {
    std::mt19937_64 g(seed);
    auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); };
    SceneSpec spec;
    spec.frames = 1;
    spec.seed = seed;
    spec.background = Background::kGradient;
    spec.background_level = real(20, 90);
    spec.noise_sigma = 2.0;
    for (int k = 0; k < 3; ++k) {
      ObjectSpec o;
      o.id = k + 1;
      o.shape = static_cast<Shape>(k % 3);
      o.cx = real(14, 50);
      o.cy = real(14, 50);
      o.radius = real(5, 9);
      o.half_width = real(4, 9);
      o.half_height = real(3, 7);
      o.intensity = real(110, 240);
      spec.objects.push_back(o);
    }
    return Generate(spec).frames[0];
  };
  auto invert = [](GrayImage img) {
    for (auto& v : img.data()) v = 255.0 - v;
    return img;
  };

  // Passthrough at alpha = 0.
  const GrayImage img = scene_frame(1);
  AdapterParams random = AdapterParams::Zero(enc.feature_channels, 0.0);
  for (auto& v : random.map) v = u(rng);
  for (auto& v : random.bias) v = u(rng);
  const QueryEncoding plain = EncodeQuery(img, enc, nullptr);
  const QueryEncoding zero = EncodeQuery(img, enc, &random);
  const FeatureGrid raw = EncodeRaw(img, enc);
  const bool passthrough = plain.feat == zero.feat && plain.keys == zero.keys &&
                           AdapterApply(raw, random) == raw;

  // (out(alpha) - x) linear in alpha.
  auto delta = [&](double alpha) {
    AdapterParams p = random;
    p.alpha = alpha;
    const FeatureGrid out = AdapterApply(raw, p);
    std::vector<double> d(out.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = out.data()[i] - raw.data()[i];
    return d;
  };
  const auto d0 = delta(0.0), dh = delta(0.5), d1 = delta(1.0);
  double lin_err = 0.0;
  for (std::size_t i = 0; i < d1.size(); ++i) {
    lin_err = std::max(lin_err, std::abs(d0[i]));
    lin_err = std::max(lin_err, std::abs(dh[i] - 0.5 * d1[i]));
    lin_err = std::max(lin_err, std::abs(d1[i] - 2.0 * dh[i]));
  }

  // Fit on inverted frames, score on held-out inverted frames.
  std::vector<std::pair<FeatureGrid, FeatureGrid>> train, test;
  for (std::uint64_t s = 10; s < 16; ++s) {
    const GrayImage f = scene_frame(s);
    train.emplace_back(EncodeRaw(invert(f), enc), EncodeRaw(f, enc));
  }
  for (std::uint64_t s = 100; s < 103; ++s) {
    const GrayImage f = scene_frame(s);
    test.emplace_back(EncodeRaw(invert(f), enc), EncodeRaw(f, enc));
  }
  const AdapterParams fitted = FitAdapter(train, 1.0, 1e-6);
  const AdapterParams none = AdapterParams::Zero(enc.feature_channels, 1.0);
  const double before = AdapterObjective(test, none);
  const double after = AdapterObjective(test, fitted);
  const double reduction = before > 0.0 ? 1.0 - after / before : 0.0;
  for (double v : fitted.map) dg.Add(v);
  for (double v : fitted.bias) dg.Add(v);
  dg.Add(before);
  dg.Add(after);

  r.seconds = Since(t0);
  r.passed = passthrough && lin_err <= 1e-9 && reduction >= 0.5 && r.seconds < 10.0;
  r.detail = Fmt("alpha=0 passthrough %s; linearity max err=%.1e (tol 1e-9); held-out feature "
                 "MSE %.3e -> %.3e, reduction %.1f%% (need >= 50%%); %.2fs (limit 10s)",
                 passthrough ? "bit-exact" : "BROKEN", lin_err, before, after,
                 100.0 * reduction, r.seconds);
  r.digest = dg.Hex();
  return r;
}

// ---------------------------------------------------------------------------

namespace {

void WriteText(const fs::path& path, const std::string& text) {
  WriteFileBytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string Quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

int RunCommand(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

std::optional<std::pair<double, double>> ParseRecord(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("sequence=", 0) != 0) continue;
    std::optional<double> j, f;
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      if (tok.rfind("j_mean=", 0) == 0) j = std::strtod(tok.c_str() + 7, nullptr);
      if (tok.rfind("f_mean=", 0) == 0) f = std::strtod(tok.c_str() + 7, nullptr);
    }
    if (j && f) return std::make_pair(*j, *f);
  }
  return std::nullopt;
}

}  // namespace

CriterionResult CheckCliPipeline(const BenchOptions& opts) {
  CriterionResult r = Named("cli_pipeline");
  const auto t0 = Clock::now();
  fs::path dir = opts.scratch_dir;
  if (dir.empty())
    dir = fs::temp_directory_path() / ("mosseg_bench_" + std::to_string(::getpid()));
  std::error_code ec;
  fs::remove_all(dir / "seq", ec);
  fs::remove_all(dir / "pred", ec);
  fs::create_directories(dir, ec);
  WriteText(dir / "tracking.spec", TrackingSpecText());
  WriteText(dir / "tracking.cfg", TrackingConfigText());

  const TrackingNumbers expected = LastTracking();
  std::optional<std::pair<double, double>> got;
  std::string how;
  if (!opts.cli_path.empty()) {
    how = "cli";
    const std::string cli = Quote(opts.cli_path);
    const std::string log = " >>" + Quote((dir / "cli.log").string()) + " 2>&1";
    const int a = RunCommand(cli + " synth --spec " + Quote((dir / "tracking.spec").string()) +
                             " --out " + Quote((dir / "seq").string()) + log);
    const int b = a != 0 ? -1
                         : RunCommand(cli + " propagate --seq " + Quote((dir / "seq").string()) +
                                      " --annotated 0 --direction forward --config " +
                                      Quote((dir / "tracking.cfg").string()) + " --out " +
                                      Quote((dir / "pred").string()) + log);
    const int c = b != 0 ? -1
                         : RunCommand(cli + " evaluate --pred " + Quote((dir / "pred").string()) +
                                      " --gt " + Quote((dir / "seq").string()) + " --out " +
                                      Quote((dir / "report.txt").string()) + log);
    if (a == 0 && b == 0 && c == 0) {
      const Bytes bytes = ReadFileBytes(dir / "report.txt");
      got = ParseRecord(std::string(bytes.begin(), bytes.end()));
    } else {
      how += Fmt(" exit codes synth=%d propagate=%d evaluate=%d", a, b, c);
    }
  } else {
    how = "in-process";
    const SynthJob job = ParseSynthSpec(TrackingSpecText());
    WriteSynthCorpus(job, dir / "seq", false);
    const RunConfig cfg = LoadRunConfig(dir / "tracking.cfg");
    const SequenceFolder seq = LoadSequence(dir / "seq", cfg.resolution);
    const FolderRun run = PropagateFolder(seq, 0, cfg);
    WriteRunOutput(dir / "pred", seq, run, cfg);
    const SequenceReport rep = EvaluateFolders(dir / "pred", dir / "seq", cfg.metric_tol);
    WriteText(dir / "report.txt", FormatReportRecord(rep) + "\n");
    const Bytes bytes = ReadFileBytes(dir / "report.txt");
    got = ParseRecord(std::string(bytes.begin(), bytes.end()));
  }
  r.seconds = Since(t0);
  r.passed = got && got->first == expected.j && got->second == expected.f;
  r.detail = got ? Fmt("%s: from files J=%.17g F=%.17g, in-memory J=%.17g F=%.17g (%s); %.2fs",
                       how.c_str(), got->first, got->second, expected.j, expected.f,
                       r.passed ? "identical" : "DIFFERENT", r.seconds)
                 : how + ": no report produced";
  Digest dg;
  if (got) {
    dg.Add(got->first);
    dg.Add(got->second);
  }
  r.digest = dg.Hex();
  return r;
}

// ---------------------------------------------------------------------------

std::vector<CriterionResult> RunAcceptance(
    const BenchOptions& opts, const std::function<void(const CriterionResult&)>& on_result) {
  using Suite = CriterionResult (*)();
  const Suite suites[] = {CheckMemoryAlgebra,    CheckConsolidationTrace,  CheckTracking,
                          CheckStaticFixedPoint, CheckBidirectionalIdentity, CheckVolumePropagation,
                          CheckMetricOracle,     CheckAdapterLaws};
  auto guarded = [](auto&& fn, const char* name) {
    try {
      return fn();
    } catch (const std::exception& e) {
      CriterionResult r = Named(name);
      r.detail = std::string("threw: ") + e.what();
      return r;
    }
  };

  std::vector<CriterionResult> first, out;
  for (Suite s : suites) {
    first.push_back(guarded(s, "suite"));
    out.push_back(first.back());
    if (on_result) on_result(first.back());
  }

  // Second pass for the determinism criterion.
  CriterionResult det = Named("determinism");
  const auto t0 = Clock::now();
  int differing = 0, failing = 0;
  std::string which;
  for (std::size_t i = 0; i < std::size(suites); ++i) {
    const CriterionResult again = guarded(suites[i], "suite");
    const bool same = again.digest == first[i].digest && again.passed == first[i].passed;
    if (!same) {
      ++differing;
      which += " " + first[i].name;
    }
    if (!again.passed || !first[i].passed) ++failing;
  }
  det.seconds = Since(t0);
  det.passed = differing == 0 && failing == 0;
  det.detail = Fmt("%zu suites rerun: %d with differing outputs%s, %d not passing both times; %.2fs",
                   std::size(suites), differing, which.c_str(), failing, det.seconds);
  out.push_back(det);
  if (on_result) on_result(det);

  CriterionResult cli = guarded([&] { return CheckCliPipeline(opts); }, "cli_pipeline");
  out.push_back(cli);
  if (on_result) on_result(cli);
  return out;
}

}  // namespace mosseg
