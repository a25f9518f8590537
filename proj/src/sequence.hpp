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

// Sequence folders on disk:
//
//   <seq>/frames/NNNNN.png   frames, numbered in strictly increasing order
//   <seq>/masks/NNNNN.png    sparse annotations (indexed, value = object id)
//   <seq>/gt/NNNNN.png       optional ground truth for evaluation

#ifndef MOSSEG_SEQUENCE_HPP_
#define MOSSEG_SEQUENCE_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "config.hpp"
#include "grid.hpp"

namespace mosseg {

struct SequenceFolder {
  std::filesystem::path path;
  std::vector<int> frame_numbers;  // ascending file numbers
  int source_height = 0;           // dims on disk
  int source_width = 0;
  std::vector<GrayImage> frames;          // at working resolution
  std::map<int, MaskMap> annotations;     // frame position -> mask, source resolution
  std::map<int, MaskMap> ground_truth;    // frame position -> mask, source resolution

  int size() const { return static_cast<int>(frames.size()); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  /// Position of a file number; -1 when absent.
  int PositionOf(int frame_number) const;
  /// Annotation at a position, resized (nearest) to the working resolution.
  MaskMap WorkingAnnotation(int position) const;
};

/// Numbered *.png files of a directory, sorted numerically.
std::vector<std::pair<int, std::filesystem::path>> ListNumberedPngs(
    const std::filesystem::path& dir);

SequenceFolder LoadSequence(const std::filesystem::path& path, const Resolution& resolution);

/// Masks keyed by file number.
std::map<int, MaskMap> LoadMaskFolder(const std::filesystem::path& dir);

std::string FrameFileName(int frame_number);  // "%05d.png"

}  // namespace mosseg

#endif  // MOSSEG_SEQUENCE_HPP_
