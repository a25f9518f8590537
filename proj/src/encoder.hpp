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

// Deterministic query/value encoders and the parallel residual adapter.
//
// Each stride x stride cell of the input is described by
//
//   [mean, variance, gradient histogram (gradient_bins), laplacian energy,
//    row coordinate, col coordinate, zero padding]
//
// with intensities scaled to [0, 1]. Keys are these descriptors after the
// optional adapter and per-position L2 normalization.

#ifndef MOSSEG_ENCODER_HPP_
#define MOSSEG_ENCODER_HPP_

#include <optional>
#include <utility>
#include <vector>

#include "grid.hpp"

namespace mosseg {

struct EncoderConfig {
  int stride = 4;
  int key_channels = 16;
  int feature_channels = 16;
  int gradient_bins = 8;
  // Scale of the centred coordinate channels. Zero makes the encoder exactly
  // translation covariant at stride granularity.
  double coord_weight = 0.25;

  /// Throws on violated invariants.
  void Validate() const;
  int descriptor_channels() const { return gradient_bins + 5; }
};

// Channel layout of the raw descriptor.
inline constexpr int kMeanChannel = 0;
inline constexpr int kVarianceChannel = 1;
inline constexpr int kFirstGradientChannel = 2;
inline int LaplacianChannel(const EncoderConfig& cfg) { return 2 + cfg.gradient_bins; }
inline int RowChannel(const EncoderConfig& cfg) { return 3 + cfg.gradient_bins; }
inline int ColChannel(const EncoderConfig& cfg) { return 4 + cfg.gradient_bins; }

struct AdapterParams {
  double alpha = 0.0;
  int channels = 0;
  std::vector<double> map;   // channels x channels, row-major
  std::vector<double> bias;  // channels

  static AdapterParams Zero(int channels, double alpha);
  static AdapterParams Identity(int channels, double alpha);
  double MapNorm() const;
};

struct QueryEncoding {
  FlatKeySet keys;
  FeatureGrid feat;  // same content as keys, as a grid
};

/// Cell descriptors before adapter and normalization.
FeatureGrid EncodeRaw(const GrayImage& image, const EncoderConfig& cfg);

/// Per-position L2 normalization; zero vectors stay zero.
FeatureGrid NormalizePositions(const FeatureGrid& grid);

QueryEncoding EncodeQuery(const GrayImage& image, const EncoderConfig& cfg,
                          const AdapterParams* adapter = nullptr, int frame_index = 0);

/// [feat channels; mask probability of object_id average-pooled per cell].
FeatureGrid EncodeValue(const FeatureGrid& feat, const MaskMap& mask, int object_id,
                        const EncoderConfig& cfg);

/// [feat channels; one pooled probability channel per object id, in order].
FeatureGrid EncodeValues(const FeatureGrid& feat, const MaskMap& mask,
                         const std::vector<int>& object_ids, const EncoderConfig& cfg);

/// out = x + alpha * (map * x + bias) at every position.
FeatureGrid AdapterApply(const FeatureGrid& x, const AdapterParams& p);

/// Ridge least-squares fit of (map, bias) so that source + alpha * (map *
/// source + bias) approximates target over all pooled positions. Only the
/// map is penalized.
AdapterParams FitAdapter(const std::vector<std::pair<FeatureGrid, FeatureGrid>>& pairs,
                         double alpha, double ridge);

/// Sum over pairs and positions of ||target - adapted(source)||^2.
double AdapterObjective(const std::vector<std::pair<FeatureGrid, FeatureGrid>>& pairs,
                        const AdapterParams& p);

/// Orientation bin that bin k maps to under a horizontal mirror.
int MirroredBin(int bin, int bins);

/// Reflect-pads the bottom/right so both dims are multiples of stride.
GrayImage PadToMultiple(const GrayImage& image, int stride);

}  // namespace mosseg

#endif  // MOSSEG_ENCODER_HPP_
