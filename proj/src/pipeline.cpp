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

#include "pipeline.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "error.hpp"
#include "png_io.hpp"

namespace mosseg {

namespace fs = std::filesystem;

namespace {

MaskMap ToSource(const SequenceFolder& seq, const MaskMap& mask) {
  if (mask.height() == seq.source_height && mask.width() == seq.source_width) return mask;
  return ResizeNearest(mask, seq.source_height, seq.source_width);
}

void WriteText(const fs::path& path, const std::string& text) {
  WriteFileBytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace

FolderRun PropagateFolder(const SequenceFolder& seq, int annotated_position,
                          const RunConfig& cfg,
                          const std::function<void(int, const MaskMap&)>& on_frame) {
  Check(annotated_position >= 0 && annotated_position < seq.size(), ErrorKind::kInvalidArgument,
        "annotated frame position out of range");
  const MaskMap annotation = seq.WorkingAnnotation(annotated_position);
  const MaskMap& source_annotation = seq.annotations.at(annotated_position);

  FolderRun run;
  run.annotated = annotated_position;
  run.masks.resize(seq.size());
  FrameCallback cb = [&](int f, const MaskMap& m) {
    run.masks[f] = f == annotated_position ? source_annotation : ToSource(seq, m);
    if (on_frame) on_frame(f, run.masks[f]);
  };
  SessionResult result = Run(seq.frames, annotated_position, annotation, cfg.propagation, cb);
  run.frame_seconds = std::move(result.frame_seconds);
  run.events = std::move(result.events);
  return run;
}

std::string FormatConsolidationLog(const SequenceFolder& seq,
                                   const std::vector<ConsolidationEvent>& events) {
  std::ostringstream out;
  for (const auto& ev : events)
    out << "frame=" << seq.frame_numbers.at(ev.frame) << " prototypes=" << ev.prototypes << "\n";
  return out.str();
}

void WriteRunOutput(const fs::path& out_dir, const SequenceFolder& seq, const FolderRun& run,
                    const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  Check(fs::is_directory(out_dir, ec), ErrorKind::kIo,
        "cannot create output directory " + out_dir.string());
  for (int f = 0; f < seq.size(); ++f) {
    if (run.masks[f].empty()) continue;
    WriteMaskPng(out_dir / FrameFileName(seq.frame_numbers[f]), run.masks[f]);
  }
  WriteText(out_dir / "consolidation.log", FormatConsolidationLog(seq, run.events));
  WriteText(out_dir / "run.cfg", FormatRunConfig(cfg));
  WriteText(out_dir / "run.info", "annotated=" + std::to_string(seq.frame_numbers[run.annotated]) +
                                      "\nframes=" + std::to_string(seq.size()) + "\n");
}

std::optional<int> ReadAnnotatedFrame(const fs::path& run_dir) {
  std::error_code ec;
  const fs::path info = run_dir / "run.info";
  if (!fs::is_regular_file(info, ec)) return std::nullopt;
  const Bytes bytes = ReadFileBytes(info);
  for (const auto& kv : ParseKeyValues(std::string(bytes.begin(), bytes.end())))
    if (kv.key == "annotated") return ParseIntValue(kv.key, kv.value);
  return std::nullopt;
}

SequenceReport EvaluateMasks(const std::map<int, MaskMap>& preds,
                             const std::map<int, MaskMap>& gts, const std::vector<int>& exclude,
                             std::optional<double> tol, const std::string& name) {
  Check(!gts.empty(), ErrorKind::kInvalidArgument, "no ground-truth masks");
  for (const auto& [n, m] : preds)
    Check(gts.count(n), ErrorKind::kInvalidArgument,
          "prediction for frame " + std::to_string(n) + " has no ground truth");

  std::set<int> ids;
  for (const auto& [n, m] : gts) ids.insert(m.object_ids().begin(), m.object_ids().end());
  Check(!ids.empty(), ErrorKind::kInvalidArgument, "ground truth contains no objects");

  std::vector<int> numbers;
  std::vector<MaskMap> p, g;
  std::vector<int> skip;
  for (const auto& [n, m] : gts) {
    const auto it = preds.find(n);
    if (std::find(exclude.begin(), exclude.end(), n) != exclude.end())
      skip.push_back(static_cast<int>(numbers.size()));
    numbers.push_back(n);
    g.push_back(m);
    p.push_back(it == preds.end() ? MaskMap() : it->second);
  }
  const MaskMap& first = gts.begin()->second;
  const double t = tol.value_or(DefaultBoundaryTolerance(first.height(), first.width()));
  SequenceReport report =
      EvaluateSequence(p, g, std::vector<int>(ids.begin(), ids.end()), skip, t);
  for (auto& f : report.frames) f = numbers[f];
  report.name = name;
  return report;
}

SequenceReport EvaluateFolders(const fs::path& pred_dir, const fs::path& gt_dir,
                               std::optional<double> tol, bool include_annotated) {
  std::error_code ec;
  fs::path gt = gt_dir;
  if (fs::is_directory(gt_dir / "gt", ec)) gt = gt_dir / "gt";
  const auto gts = LoadMaskFolder(gt);
  const auto preds = LoadMaskFolder(pred_dir);
  std::vector<int> exclude;
  if (!include_annotated) {
    if (const auto a = ReadAnnotatedFrame(pred_dir)) exclude.push_back(*a);
  }
  fs::path name_path = pred_dir;
  if (!name_path.has_filename()) name_path = name_path.parent_path();
  return EvaluateMasks(preds, gts, exclude, tol, name_path.filename().string());
}

}  // namespace mosseg
