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

// Folder-level propagation and evaluation shared by the CLI and the service.

#ifndef MOSSEG_PIPELINE_HPP_
#define MOSSEG_PIPELINE_HPP_

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "metrics.hpp"
#include "propagator.hpp"
#include "sequence.hpp"

namespace mosseg {

struct FolderRun {
  int annotated = 0;           // position
  std::vector<MaskMap> masks;  // source resolution; empty where not covered
  std::vector<double> frame_seconds;
  std::vector<ConsolidationEvent> events;  // frame = position
};

/// Masks come back at source resolution (nearest resize when the working
/// resolution differs). The annotated frame returns the stored annotation.
/// on_frame sees (position, source-resolution mask) as each one is produced.
FolderRun PropagateFolder(const SequenceFolder& seq, int annotated_position,
                          const RunConfig& cfg,
                          const std::function<void(int, const MaskMap&)>& on_frame = {});

/// <out>/NNNNN.png per covered frame (file numbers of seq), consolidation.log
/// ("frame=<n> prototypes=<p>" per event), run.cfg and run.info.
void WriteRunOutput(const std::filesystem::path& out_dir, const SequenceFolder& seq,
                    const FolderRun& run, const RunConfig& cfg);

std::string FormatConsolidationLog(const SequenceFolder& seq,
                                   const std::vector<ConsolidationEvent>& events);

/// Scores predictions against ground truth keyed by frame number. Frames
/// without a prediction and excluded frames are skipped. Object ids are the
/// union over the ground truth. Report frames hold frame numbers.
SequenceReport EvaluateMasks(const std::map<int, MaskMap>& preds,
                             const std::map<int, MaskMap>& gts, const std::vector<int>& exclude,
                             std::optional<double> tol, const std::string& name);

/// gt_dir may be a mask directory or a sequence folder with gt/. When
/// pred_dir holds run.info, its annotated frame is excluded unless
/// include_annotated is set.
SequenceReport EvaluateFolders(const std::filesystem::path& pred_dir,
                               const std::filesystem::path& gt_dir, std::optional<double> tol,
                               bool include_annotated = false);

/// Annotated frame number recorded in <dir>/run.info, if any.
std::optional<int> ReadAnnotatedFrame(const std::filesystem::path& run_dir);

}  // namespace mosseg

#endif  // MOSSEG_PIPELINE_HPP_
