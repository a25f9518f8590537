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

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "error.hpp"

namespace mosseg {

FeatureGrid::FeatureGrid(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  Check(channels >= 0 && height >= 0 && width >= 0, ErrorKind::kInvalidArgument,
        "negative grid dimension");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

FeatureGrid::FeatureGrid(int channels, int height, int width, std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  Check(channels >= 0 && height >= 0 && width >= 0, ErrorKind::kInvalidArgument,
        "negative grid dimension");
  Check(data_.size() == static_cast<std::size_t>(channels) * height * width,
        ErrorKind::kInvalidArgument, "grid data length does not match dimensions");
}

bool FeatureGrid::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------

MaskMap MaskMap::FromLabels(int height, int width, std::vector<std::uint8_t> labels) {
  std::set<int> ids;
  for (auto l : labels) {
    if (l != 0) ids.insert(l);
  }
  return FromLabels(height, width, std::move(labels), {ids.begin(), ids.end()});
}

MaskMap MaskMap::FromLabels(int height, int width, std::vector<std::uint8_t> labels,
                            std::vector<int> object_ids) {
  Check(height >= 0 && width >= 0, ErrorKind::kInvalidArgument, "negative mask dimension");
  Check(labels.size() == static_cast<std::size_t>(height) * width,
        ErrorKind::kInvalidArgument, "mask label count does not match dimensions");
  std::sort(object_ids.begin(), object_ids.end());
  object_ids.erase(std::unique(object_ids.begin(), object_ids.end()), object_ids.end());
  for (int id : object_ids) {
    Check(id >= 1 && id <= 255, ErrorKind::kInvalidArgument,
          "object id out of range: " + std::to_string(id));
  }

  MaskMap m;
  m.height_ = height;
  m.width_ = width;
  m.object_ids_ = std::move(object_ids);
  m.labels_ = std::move(labels);
  const int n = m.num_pixels();
  m.probs_.assign(static_cast<std::size_t>(m.num_planes()) * n, 0.0);
  for (int p = 0; p < n; ++p) {
    const int plane = m.PlaneOf(m.labels_[p]);
    Check(plane >= 0, ErrorKind::kInvalidArgument,
          "label " + std::to_string(m.labels_[p]) + " not in object id set");
    m.probs_[static_cast<std::size_t>(plane) * n + p] = 1.0;
  }
  return m;
}

MaskMap MaskMap::FromProbs(int height, int width, std::vector<int> object_ids,
                           std::vector<double> probs) {
  Check(std::is_sorted(object_ids.begin(), object_ids.end()), ErrorKind::kInvalidArgument,
        "object ids must be sorted");
  MaskMap m;
  m.height_ = height;
  m.width_ = width;
  m.object_ids_ = std::move(object_ids);
  const int n = m.num_pixels();
  Check(probs.size() == static_cast<std::size_t>(m.num_planes()) * n,
        ErrorKind::kInvalidArgument, "probability plane count does not match");
  m.probs_ = std::move(probs);
  m.labels_.assign(n, 0);
  for (int p = 0; p < n; ++p) {
    int best = 0;
    double best_v = m.probs_[p];
    for (int k = 1; k < m.num_planes(); ++k) {
      const double v = m.probs_[static_cast<std::size_t>(k) * n + p];
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    m.labels_[p] = best == 0 ? 0 : static_cast<std::uint8_t>(m.object_ids_[best - 1]);
  }
  return m;
}

bool MaskMap::HasObject(int object_id) const { return object_id != 0 && PlaneOf(object_id) > 0; }

int MaskMap::PlaneOf(int object_id) const {
  if (object_id == 0) return 0;
  auto it = std::lower_bound(object_ids_.begin(), object_ids_.end(), object_id);
  if (it == object_ids_.end() || *it != object_id) return -1;
  return static_cast<int>(it - object_ids_.begin()) + 1;
}

std::size_t MaskMap::Area(int object_id) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), object_id));
}

bool MaskMap::HasForeground() const {
  return std::any_of(labels_.begin(), labels_.end(), [](std::uint8_t l) { return l != 0; });
}

MaskMap MaskMap::Hardened() const {
  return FromLabels(height_, width_, labels_, object_ids_);
}

bool MaskMap::IsConsistent(double tol) const {
  const int n = num_pixels();
  if (labels_.size() != static_cast<std::size_t>(n)) return false;
  if (probs_.size() != static_cast<std::size_t>(num_planes()) * n) return false;
  for (int p = 0; p < n; ++p) {
    double sum = 0.0;
    int best = 0;
    double best_v = -1.0;
    for (int k = 0; k < num_planes(); ++k) {
      const double v = probs_[static_cast<std::size_t>(k) * n + p];
      if (!(v >= 0.0 && v <= 1.0)) return false;
      sum += v;
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    if (std::abs(sum - 1.0) > tol) return false;
    const int expect = best == 0 ? 0 : object_ids_[best - 1];
    if (labels_[p] != expect) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> BilinearTaps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, src - lo};
  }
  return taps;
}

}  // namespace

FeatureGrid ResizeBilinear(const FeatureGrid& grid, int height, int width) {
  Check(grid.height() > 0 && grid.width() > 0 && grid.channels() > 0,
        ErrorKind::kInvalidArgument, "empty grid");
  Check(height >= 1 && width >= 1, ErrorKind::kInvalidArgument,
        "resize target must be at least 1x1");
  if (height == grid.height() && width == grid.width()) return grid;

  const auto ty = BilinearTaps(grid.height(), height);
  const auto tx = BilinearTaps(grid.width(), width);
  FeatureGrid out(grid.channels(), height, width);
  for (int c = 0; c < grid.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const Tap& a = ty[y];
      for (int x = 0; x < width; ++x) {
        const Tap& b = tx[x];
        // a + f * (b - a) keeps constant inputs exactly constant.
        const double v00 = grid.at(c, a.lo, b.lo);
        const double v01 = grid.at(c, a.lo, b.hi);
        const double v10 = grid.at(c, a.hi, b.lo);
        const double v11 = grid.at(c, a.hi, b.hi);
        const double top = v00 + b.frac * (v01 - v00);
        const double bot = v10 + b.frac * (v11 - v10);
        out.at(c, y, x) = top + a.frac * (bot - top);
      }
    }
  }
  return out;
}

MaskMap ResizeNearest(const MaskMap& mask, int height, int width) {
  Check(mask.height() > 0 && mask.width() > 0, ErrorKind::kInvalidArgument, "empty grid");
  Check(height >= 1 && width >= 1, ErrorKind::kInvalidArgument,
        "resize target must be at least 1x1");
  if (height == mask.height() && width == mask.width()) return mask;
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(mask.height() - 1,
                            static_cast<int>((y + 0.5) * mask.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(mask.width() - 1,
                              static_cast<int>((x + 0.5) * mask.width() / width));
      labels[static_cast<std::size_t>(y) * width + x] = mask.label(sy, sx);
    }
  }
  return MaskMap::FromLabels(height, width, std::move(labels), mask.object_ids());
}

FlatKeySet Flatten(const FeatureGrid& grid, int frame_index) {
  FlatKeySet keys;
  keys.key_channels = grid.channels();
  keys.columns = grid.plane_size();
  keys.data.resize(grid.size());
  keys.origin.resize(keys.columns);
  for (int j = 0; j < keys.columns; ++j) {
    auto col = keys.column(j);
    for (int c = 0; c < grid.channels(); ++c) col[c] = grid.plane(c)[j];
    keys.origin[j] = {frame_index, j};
  }
  return keys;
}

FeatureGrid Unflatten(const FlatKeySet& keys, int height, int width) {
  Check(keys.columns == height * width, ErrorKind::kInvalidArgument,
        "column count does not match grid dimensions");
  FeatureGrid grid(keys.key_channels, height, width);
  for (int j = 0; j < keys.columns; ++j) {
    auto col = keys.column(j);
    for (int c = 0; c < keys.key_channels; ++c) grid.plane(c)[j] = col[c];
  }
  return grid;
}

}  // namespace mosseg
