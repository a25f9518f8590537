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

// Synthetic sequences with exact ground truth, and a brute-force
// template-matching tracker used as an independent reference.

#ifndef MOSSEG_SYNTHGEN_HPP_
#define MOSSEG_SYNTHGEN_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "grid.hpp"

namespace mosseg {

enum class Shape { kDisk, kRectangle, kBlob };
enum class Background { kUniform, kGradient, kNoise };

struct Occlusion {
  int start = 0;  // first occluded frame
  int end = 0;    // last occluded frame
  double width = 6.0;
  double intensity = 0.0;
};

struct ObjectSpec {
  int id = 1;
  Shape shape = Shape::kDisk;
  double cx = 32.0;
  double cy = 32.0;
  double radius = 8.0;       // disk and blob
  double half_width = 8.0;   // rectangle
  double half_height = 5.0;  // rectangle
  double intensity = 200.0;
  double vx = 0.0;  // px / frame
  double vy = 0.0;
  double rotation_deg = 0.0;  // deg / frame
  double scale = 1.0;         // factor / frame
  std::optional<Occlusion> occlusion;
  std::optional<int> split_frame;
};

struct SceneSpec {
  int height = 64;
  int width = 64;
  int frames = 20;
  std::uint64_t seed = 0;
  Background background = Background::kUniform;
  double background_level = 50.0;
  double gradient_span = 60.0;  // left-to-right rise for kGradient
  double texture_sigma = 10.0;  // static texture for kNoise
  double noise_sigma = 0.0;     // per-frame additive noise on everything
  std::vector<ObjectSpec> objects;
};

struct SyntheticSequence {
  std::vector<GrayImage> frames;
  std::vector<MaskMap> masks;
};

/// Frames are quantized to integers in [0, 255].
SyntheticSequence Generate(const SceneSpec& spec);

struct VolumeSpec {
  int depth = 64;  // number of slices
  int height = 64;
  int width = 64;
  double semi_x = 20.0;
  double semi_y = 14.0;
  double semi_z = 26.0;
  std::optional<double> cx, cy, cz;  // default: dims / 2
  double intensity = 190.0;
  double background_level = 40.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  double center_x() const { return cx.value_or(width / 2.0); }
  double center_y() const { return cy.value_or(height / 2.0); }
  double center_z() const { return cz.value_or(depth / 2.0); }
};

SyntheticSequence GenerateVolume(const VolumeSpec& spec);

/// Analytic cross-section semi-axes of a volume slice; nullopt when the
/// slice misses the ellipsoid.
std::optional<std::pair<double, double>> SliceSemiAxes(const VolumeSpec& spec, int slice);

/// Exhaustive SSD template matching of the annotated patch over every
/// integer shift of every frame; returns the shifted annotation per frame.
/// Only valid for single-object rigid translation scenes.
std::vector<MaskMap> OracleTrack(const SceneSpec& spec, const std::vector<GrayImage>& frames,
                                 const MaskMap& annotation, int annotated_index = 0);

/// Integer shift found by the oracle for one frame.
std::pair<int, int> OracleShift(const GrayImage& reference, const MaskMap& annotation,
                                const GrayImage& frame, int margin = 2);

/// Counter-based standard normal sample; independent of evaluation order.
double GaussianAt(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b);

}  // namespace mosseg

#endif  // MOSSEG_SYNTHGEN_HPP_
