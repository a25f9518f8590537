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

#include "synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "error.hpp"

namespace mosseg {

namespace {

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double UniformAt(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = SplitMix(seed);
  h = SplitMix(h ^ stream);
  h = SplitMix(h ^ a);
  h = SplitMix(h ^ b);
  // 53 random bits in (0, 1).
  return (static_cast<double>(h >> 11) + 0.5) * 0x1p-53;
}

double Quantize(double v) { return std::clamp(std::round(v), 0.0, 255.0); }

constexpr std::uint64_t kTextureStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kBlobStream = 3;

struct Placement {
  double cx, cy;
  double angle;  // radians
  double scale;
  bool split;
};

Placement PlaceAt(const ObjectSpec& o, int t) {
  return {o.cx + o.vx * t, o.cy + o.vy * t, o.rotation_deg * t * std::numbers::pi / 180.0,
          std::pow(o.scale, t), o.split_frame && t >= *o.split_frame};
}

double BaseExtent(const ObjectSpec& o) {
  switch (o.shape) {
    case Shape::kDisk:
      return o.radius;
    case Shape::kRectangle:
      return std::hypot(o.half_width, o.half_height);
    case Shape::kBlob:
      return o.radius * 1.35;
  }
  return o.radius;
}

constexpr double kSplitScale = 0.55;
constexpr double kSplitOffset = 0.8;

double Extent(const ObjectSpec& o, const Placement& p) {
  const double e = BaseExtent(o) * p.scale;
  return p.split ? e * (kSplitOffset + kSplitScale) : e;
}

// Shape test in object-local, unscaled coordinates.
bool InsideShape(const ObjectSpec& o, double lx, double ly, std::uint64_t seed) {
  switch (o.shape) {
    case Shape::kDisk:
      return lx * lx + ly * ly <= o.radius * o.radius;
    case Shape::kRectangle:
      return std::abs(lx) <= o.half_width && std::abs(ly) <= o.half_height;
    case Shape::kBlob: {
      const double phase = 2.0 * std::numbers::pi * UniformAt(seed, kBlobStream, o.id, 0);
      const double phase2 = 2.0 * std::numbers::pi * UniformAt(seed, kBlobStream, o.id, 1);
      const double theta = std::atan2(ly, lx);
      const double r = o.radius * (1.0 + 0.25 * std::sin(3.0 * theta + phase) +
                                   0.1 * std::cos(5.0 * theta + phase2));
      return lx * lx + ly * ly <= r * r;
    }
  }
  return false;
}

bool Covers(const ObjectSpec& o, const Placement& p, double x, double y, std::uint64_t seed) {
  const double dx = x - p.cx;
  const double dy = y - p.cy;
  const double c = std::cos(p.angle);
  const double s = std::sin(p.angle);
  // Rotate into the object frame, then undo the scale.
  double lx = (c * dx + s * dy) / p.scale;
  double ly = (-s * dx + c * dy) / p.scale;
  if (!p.split) return InsideShape(o, lx, ly, seed);
  const double off = kSplitOffset * BaseExtent(o);
  return InsideShape(o, (lx - off) / kSplitScale, ly / kSplitScale, seed) ||
         InsideShape(o, (lx + off) / kSplitScale, ly / kSplitScale, seed);
}

}  // namespace

double GaussianAt(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) {
  const double u1 = UniformAt(seed, stream, a, 2 * b);
  const double u2 = UniformAt(seed, stream, a, 2 * b + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SyntheticSequence Generate(const SceneSpec& spec) {
  Check(spec.height >= 3 && spec.width >= 3, ErrorKind::kInvalidArgument,
        "canvas must be at least 3x3");
  Check(spec.frames >= 1, ErrorKind::kInvalidArgument, "frame count must be >= 1");
  for (const auto& o : spec.objects) {
    Check(o.id >= 1 && o.id <= 255, ErrorKind::kInvalidArgument, "object id must be in 1..255");
    Check(o.scale > 0.0, ErrorKind::kInvalidArgument, "object scale must be > 0");
    for (int t = 0; t < spec.frames; ++t) {
      const Placement p = PlaceAt(o, t);
      const double e = Extent(o, p);
      Check(p.cx - e >= 1.0 && p.cy - e >= 1.0 && p.cx + e <= spec.width - 2.0 &&
                p.cy + e <= spec.height - 2.0,
            ErrorKind::kInvalidArgument,
            "object out of bounds: id " + std::to_string(o.id) + " at frame " + std::to_string(t));
    }
  }

  const int h = spec.height;
  const int w = spec.width;
  SyntheticSequence seq;
  for (int t = 0; t < spec.frames; ++t) {
    GrayImage img(1, h, w);
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(h) * w, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double v = spec.background_level;
        if (spec.background == Background::kGradient) {
          v += spec.gradient_span * x / std::max(1, w - 1);
        } else if (spec.background == Background::kNoise) {
          v += spec.texture_sigma *
               GaussianAt(spec.seed, kTextureStream, 0, static_cast<std::uint64_t>(y) * w + x);
        }
        img.at(0, y, x) = v;
      }
    }
    for (const auto& o : spec.objects) {
      const Placement p = PlaceAt(o, t);
      const double e = Extent(o, p);
      const int y0 = std::max(0, static_cast<int>(std::floor(p.cy - e)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(p.cy + e)));
      const int x0 = std::max(0, static_cast<int>(std::floor(p.cx - e)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(p.cx + e)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          if (Covers(o, p, x, y, spec.seed)) {
            img.at(0, y, x) = o.intensity;
            labels[static_cast<std::size_t>(y) * w + x] = static_cast<std::uint8_t>(o.id);
          }
        }
      }
    }
    for (const auto& o : spec.objects) {
      if (!o.occlusion || t < o.occlusion->start || t > o.occlusion->end) continue;
      const Occlusion& occ = *o.occlusion;
      const Placement p = PlaceAt(o, t);
      const double e = Extent(o, p);
      const double span = occ.end > occ.start ? occ.end - occ.start : 0.0;
      const double frac = span > 0.0 ? (t - occ.start) / span : 0.5;
      const double left = p.cx - e - occ.width + (2.0 * e + occ.width) * frac;
      for (int x = std::max(0, static_cast<int>(std::ceil(left)));
           x < std::min(w, static_cast<int>(std::ceil(left + occ.width))); ++x) {
        for (int y = 0; y < h; ++y) {
          img.at(0, y, x) = occ.intensity;
          labels[static_cast<std::size_t>(y) * w + x] = 0;
        }
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double v = img.at(0, y, x);
        if (spec.noise_sigma > 0.0) {
          v += spec.noise_sigma * GaussianAt(spec.seed, kNoiseStream, t,
                                             static_cast<std::uint64_t>(y) * w + x);
        }
        img.at(0, y, x) = Quantize(v);
      }
    }
    std::vector<int> ids;
    for (const auto& o : spec.objects) ids.push_back(o.id);
    seq.frames.push_back(std::move(img));
    seq.masks.push_back(MaskMap::FromLabels(h, w, std::move(labels), ids));
  }
  return seq;
}

std::optional<std::pair<double, double>> SliceSemiAxes(const VolumeSpec& spec, int slice) {
  const double d = slice - spec.center_z();
  const double q = 1.0 - d * d / (spec.semi_z * spec.semi_z);
  if (q <= 0.0) return std::nullopt;
  const double s = std::sqrt(q);
  return std::make_pair(spec.semi_x * s, spec.semi_y * s);
}

SyntheticSequence GenerateVolume(const VolumeSpec& spec) {
  Check(spec.depth >= 1 && spec.height >= 3 && spec.width >= 3, ErrorKind::kInvalidArgument,
        "volume must be at least 1x3x3");
  Check(spec.semi_x > 0 && spec.semi_y > 0 && spec.semi_z > 0, ErrorKind::kInvalidArgument,
        "ellipsoid semi-axes must be > 0");
  const double cx = spec.center_x();
  const double cy = spec.center_y();
  Check(cx - spec.semi_x >= 0 && cx + spec.semi_x <= spec.width - 1 && cy - spec.semi_y >= 0 &&
            cy + spec.semi_y <= spec.height - 1,
        ErrorKind::kInvalidArgument, "ellipsoid does not fit inside the volume");

  SyntheticSequence seq;
  for (int z = 0; z < spec.depth; ++z) {
    const auto axes = SliceSemiAxes(spec, z);
    GrayImage img(1, spec.height, spec.width, spec.background_level);
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(spec.height) * spec.width, 0);
    if (axes) {
      const auto [a, b] = *axes;
      for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
          const double u = (x - cx) / a;
          const double v = (y - cy) / b;
          if (u * u + v * v <= 1.0) {
            img.at(0, y, x) = spec.intensity;
            labels[static_cast<std::size_t>(y) * spec.width + x] = 1;
          }
        }
      }
    }
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        double v = img.at(0, y, x);
        if (spec.noise_sigma > 0.0) {
          v += spec.noise_sigma * GaussianAt(spec.seed, kNoiseStream, z,
                                             static_cast<std::uint64_t>(y) * spec.width + x);
        }
        img.at(0, y, x) = Quantize(v);
      }
    }
    seq.frames.push_back(std::move(img));
    seq.masks.push_back(MaskMap::FromLabels(spec.height, spec.width, std::move(labels), {1}));
  }
  return seq;
}

// ---------------------------------------------------------------------------

std::pair<int, int> OracleShift(const GrayImage& reference, const MaskMap& annotation,
                                const GrayImage& frame, int margin) {
  const int h = reference.height();
  const int w = reference.width();
  int y0 = h, y1 = -1, x0 = w, x1 = -1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (annotation.label(y, x) == 0) continue;
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
    }
  }
  Check(y1 >= 0, ErrorKind::kInvalidArgument, "empty annotation");
  y0 = std::max(0, y0 - margin);
  x0 = std::max(0, x0 - margin);
  y1 = std::min(h - 1, y1 + margin);
  x1 = std::min(w - 1, x1 + margin);

  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> best_shift{0, 0};
  long best_dist = 0;
  for (int dy = -y0; dy + y1 < h; ++dy) {
    for (int dx = -x0; dx + x1 < w; ++dx) {
      double ssd = 0.0;
      for (int y = y0; y <= y1 && ssd <= best; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double d = frame.at(0, y + dy, x + dx) - reference.at(0, y, x);
          ssd += d * d;
        }
      }
      const long dist = static_cast<long>(dx) * dx + static_cast<long>(dy) * dy;
      if (ssd < best || (ssd == best && dist < best_dist)) {
        best = ssd;
        best_shift = {dx, dy};
        best_dist = dist;
      }
    }
  }
  return best_shift;
}

std::vector<MaskMap> OracleTrack(const SceneSpec& spec, const std::vector<GrayImage>& frames,
                                 const MaskMap& annotation, int annotated_index) {
  const bool rigid = spec.objects.size() == 1 && spec.objects[0].rotation_deg == 0.0 &&
                     spec.objects[0].scale == 1.0 && !spec.objects[0].split_frame &&
                     !spec.objects[0].occlusion;
  Check(rigid, ErrorKind::kInvalidArgument, "oracle supports rigid translation only");
  Check(annotated_index >= 0 && annotated_index < static_cast<int>(frames.size()),
        ErrorKind::kInvalidArgument, "annotated frame index out of range");

  const GrayImage& ref = frames[annotated_index];
  const int h = annotation.height();
  const int w = annotation.width();
  std::vector<MaskMap> out;
  for (const auto& frame : frames) {
    const auto [dx, dy] = OracleShift(ref, annotation, frame);
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(h) * w, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int sy = y - dy;
        const int sx = x - dx;
        if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
          labels[static_cast<std::size_t>(y) * w + x] = annotation.label(sy, sx);
        }
      }
    }
    out.push_back(MaskMap::FromLabels(h, w, std::move(labels), annotation.object_ids()));
  }
  return out;
}

}  // namespace mosseg
