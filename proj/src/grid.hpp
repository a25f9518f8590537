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

// Dense grids and masks shared by every stage of the engine.

#ifndef MOSSEG_GRID_HPP_
#define MOSSEG_GRID_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mosseg {

/// channels x height x width array of doubles, stored plane by plane
/// (channel-major, each plane row-major).
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int channels, int height, int width, double fill = 0.0);
  FeatureGrid(int channels, int height, int width, std::vector<double> data);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int plane_size() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  std::span<double> plane(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * plane_size(),
            static_cast<std::size_t>(plane_size())};
  }
  std::span<const double> plane(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * plane_size(),
            static_cast<std::size_t>(plane_size())};
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool AllFinite() const;

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Grayscale images are single-channel grids with intensities in [0, 255].
using GrayImage = FeatureGrid;

/// Integer label grid plus per-label probability planes.
///
/// Plane 0 is background; plane k (k >= 1) belongs to object_ids()[k - 1].
/// Object ids are kept sorted; plane order equals id order.
class MaskMap {
 public:
  MaskMap() = default;

  /// One-hot probabilities. Object ids are the distinct nonzero labels.
  static MaskMap FromLabels(int height, int width, std::vector<std::uint8_t> labels);
  /// One-hot probabilities over an explicit id set (ids may be absent from
  /// the labels; labels outside the set are rejected).
  static MaskMap FromLabels(int height, int width, std::vector<std::uint8_t> labels,
                            std::vector<int> object_ids);
  /// probs holds (1 + object_ids.size()) planes. Labels are the argmax.
  static MaskMap FromProbs(int height, int width, std::vector<int> object_ids,
                           std::vector<double> probs);

  int height() const { return height_; }
  int width() const { return width_; }
  int num_pixels() const { return height_ * width_; }
  bool empty() const { return labels_.empty(); }

  std::span<const std::uint8_t> labels() const { return labels_; }
  std::uint8_t label(int y, int x) const { return labels_[y * width_ + x]; }
  const std::vector<int>& object_ids() const { return object_ids_; }
  int num_planes() const { return static_cast<int>(object_ids_.size()) + 1; }

  bool HasObject(int object_id) const;
  /// Plane index of an object id, -1 when absent. Background (0) is plane 0.
  int PlaneOf(int object_id) const;
  std::span<const double> prob_plane(int plane) const {
    return {probs_.data() + static_cast<std::size_t>(plane) * num_pixels(),
            static_cast<std::size_t>(num_pixels())};
  }

  /// Number of pixels labelled with object_id.
  std::size_t Area(int object_id) const;
  bool HasForeground() const;

  /// Same labels, one-hot probabilities.
  MaskMap Hardened() const;

  /// Checks the label/probability invariants. Returns false on violation.
  bool IsConsistent(double tol = 1e-6) const;

  friend bool operator==(const MaskMap&, const MaskMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> labels_;
  std::vector<int> object_ids_;
  std::vector<double> probs_;
};

struct KeyOrigin {
  int frame = 0;
  int position = 0;
  friend bool operator==(const KeyOrigin&, const KeyOrigin&) = default;
};

/// Key matrix with one column per spatial position. Columns are stored
/// contiguously (column j occupies data[j * key_channels, (j+1) * key_channels)).
struct FlatKeySet {
  int key_channels = 0;
  int columns = 0;
  std::vector<double> data;
  std::vector<KeyOrigin> origin;

  std::span<const double> column(int j) const {
    return {data.data() + static_cast<std::size_t>(j) * key_channels,
            static_cast<std::size_t>(key_channels)};
  }
  std::span<double> column(int j) {
    return {data.data() + static_cast<std::size_t>(j) * key_channels,
            static_cast<std::size_t>(key_channels)};
  }

  friend bool operator==(const FlatKeySet&, const FlatKeySet&) = default;
};

/// Bilinear resize, half-pixel centers (align_corners = false).
FeatureGrid ResizeBilinear(const FeatureGrid& grid, int height, int width);

/// Nearest-neighbour resize of a label mask. Never introduces new labels.
MaskMap ResizeNearest(const MaskMap& mask, int height, int width);

FlatKeySet Flatten(const FeatureGrid& grid, int frame_index = 0);
FeatureGrid Unflatten(const FlatKeySet& keys, int height, int width);

}  // namespace mosseg

#endif  // MOSSEG_GRID_HPP_
