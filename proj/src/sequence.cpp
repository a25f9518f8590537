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

#include "sequence.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "error.hpp"
#include "png_io.hpp"

namespace mosseg {

namespace fs = std::filesystem;

int SequenceFolder::PositionOf(int frame_number) const {
  const auto it = std::lower_bound(frame_numbers.begin(), frame_numbers.end(), frame_number);
  if (it == frame_numbers.end() || *it != frame_number) return -1;
  return static_cast<int>(it - frame_numbers.begin());
}

MaskMap SequenceFolder::WorkingAnnotation(int position) const {
  const auto it = annotations.find(position);
  Check(it != annotations.end(), ErrorKind::kNotFound,
        "no annotation at frame position " + std::to_string(position));
  if (it->second.height() == height() && it->second.width() == width()) return it->second;
  return ResizeNearest(it->second, height(), width());
}

std::string FrameFileName(int frame_number) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d.png", frame_number);
  return buf;
}

std::vector<std::pair<int, fs::path>> ListNumberedPngs(const fs::path& dir) {
  std::error_code ec;
  Check(fs::is_directory(dir, ec), ErrorKind::kNotFound, "missing directory " + dir.string());
  std::vector<std::pair<int, fs::path>> out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() != ".png") continue;
    const std::string stem = p.stem().string();
    int number = -1;
    const auto [ptr, err] = std::from_chars(stem.data(), stem.data() + stem.size(), number);
    Check(!stem.empty() && err == std::errc() && ptr == stem.data() + stem.size() && number >= 0,
          ErrorKind::kFormat, "frame file name is not a decimal index: " + p.string());
    out.emplace_back(number, p);
  }
  Check(!ec, ErrorKind::kIo, "cannot list " + dir.string());
  std::sort(out.begin(), out.end());
  for (std::size_t i = 1; i < out.size(); ++i)
    Check(out[i].first > out[i - 1].first, ErrorKind::kFormat,
          "non-monotonic frame indices: " + out[i - 1].second.filename().string() + " and " +
              out[i].second.filename().string() + " share index " +
              std::to_string(out[i].first));
  return out;
}

std::map<int, MaskMap> LoadMaskFolder(const fs::path& dir) {
  std::map<int, MaskMap> out;
  for (const auto& [n, p] : ListNumberedPngs(dir)) out.emplace(n, ReadMaskPng(p));
  return out;
}

SequenceFolder LoadSequence(const fs::path& path, const Resolution& resolution) {
  SequenceFolder seq;
  seq.path = path;
  const fs::path frames_dir = path / "frames";
  std::error_code ec;
  Check(fs::is_directory(frames_dir, ec), ErrorKind::kNotFound,
        "missing frames directory " + frames_dir.string());
  const auto files = ListNumberedPngs(frames_dir);
  Check(!files.empty(), ErrorKind::kInvalidArgument, "no frames in " + frames_dir.string());

  for (const auto& [n, p] : files) {
    GrayImage img = ReadGrayPng(p);
    if (seq.frames.empty()) {
      seq.source_height = img.height();
      seq.source_width = img.width();
    }
    Check(img.height() == seq.source_height && img.width() == seq.source_width,
          ErrorKind::kFormat, "frame dims differ: " + p.string());
    if (!resolution.native &&
        (img.height() != resolution.height || img.width() != resolution.width))
      img = ResizeBilinear(img, resolution.height, resolution.width);
    seq.frame_numbers.push_back(n);
    seq.frames.push_back(std::move(img));
  }

  auto load_masks = [&](const fs::path& dir, std::map<int, MaskMap>& into) {
    if (!fs::is_directory(dir, ec)) return;
    for (const auto& [n, p] : ListNumberedPngs(dir)) {
      const int pos = seq.PositionOf(n);
      Check(pos >= 0, ErrorKind::kFormat, "mask without a matching frame: " + p.string());
      MaskMap m = ReadMaskPng(p);
      Check(m.height() == seq.source_height && m.width() == seq.source_width, ErrorKind::kFormat,
            "mask/frame dim mismatch: " + p.string() + " is " + std::to_string(m.height()) +
                "x" + std::to_string(m.width()) + ", frames are " +
                std::to_string(seq.source_height) + "x" + std::to_string(seq.source_width));
      into.emplace(pos, std::move(m));
    }
  };
  load_masks(path / "masks", seq.annotations);
  load_masks(path / "gt", seq.ground_truth);
  return seq;
}

}  // namespace mosseg
