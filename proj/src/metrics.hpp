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

// Region similarity J, contour similarity F and their mean J&F.

#ifndef MOSSEG_METRICS_HPP_
#define MOSSEG_METRICS_HPP_

#include <string>
#include <vector>

#include "grid.hpp"

namespace mosseg {

struct FrameScore {
  double j = 0.0;
  double f = 0.0;
  double jf = 0.0;
  friend bool operator==(const FrameScore&, const FrameScore&) = default;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population
  friend bool operator==(const Summary&, const Summary&) = default;
};

struct SequenceReport {
  std::string name;
  std::vector<int> frames;  // evaluated frame indices
  std::vector<FrameScore> scores;
  Summary j, f, jf;

  friend bool operator==(const SequenceReport&, const SequenceReport&) = default;
};

/// |pred ∩ gt| / |pred ∪ gt| on the object's binary masks; 1 when both empty.
double Jaccard(const MaskMap& pred, const MaskMap& gt, int object_id);

/// Boundary pixels are object pixels with a 4-neighbour outside the object
/// (the image border counts as outside).
std::vector<std::uint8_t> BoundaryMap(const MaskMap& mask, int object_id);

/// Boundary F-measure. A boundary pixel matches when a boundary pixel of the
/// other mask lies within Euclidean distance tol. 1 when both are empty.
double BoundaryF(const MaskMap& pred, const MaskMap& gt, int object_id, double tol);

/// ceil(0.008 * image diagonal).
double DefaultBoundaryTolerance(int height, int width);

/// Scores every frame that has a prediction (non-empty mask) and is not
/// excluded; per-frame scores average over object_ids.
SequenceReport EvaluateSequence(const std::vector<MaskMap>& preds,
                                const std::vector<MaskMap>& gts,
                                const std::vector<int>& object_ids,
                                const std::vector<int>& exclude, double tol);

Summary Summarize(const std::vector<double>& values);

/// Per-frame table plus a mean(std) footer.
std::string FormatReportTable(const SequenceReport& report);
/// Single "key=value ..." line; reals printed round-trip exact.
std::string FormatReportRecord(const SequenceReport& report);

}  // namespace mosseg

#endif  // MOSSEG_METRICS_HPP_
