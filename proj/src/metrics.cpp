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

#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "error.hpp"

namespace mosseg {

namespace {

void CheckSameDims(const MaskMap& a, const MaskMap& b) {
  Check(a.height() == b.height() && a.width() == b.width(), ErrorKind::kInvalidArgument,
        "mask dimension mismatch: " + std::to_string(a.height()) + "x" +
            std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
            std::to_string(b.width()));
}

}  // namespace

double Jaccard(const MaskMap& pred, const MaskMap& gt, int object_id) {
  CheckSameDims(pred, gt);
  std::size_t inter = 0;
  std::size_t uni = 0;
  const auto a = pred.labels();
  const auto b = gt.labels();
  for (std::size_t p = 0; p < a.size(); ++p) {
    const bool in_a = a[p] == object_id;
    const bool in_b = b[p] == object_id;
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::uint8_t> BoundaryMap(const MaskMap& mask, int object_id) {
  const int h = mask.height();
  const int w = mask.width();
  std::vector<std::uint8_t> b(static_cast<std::size_t>(h) * w, 0);
  auto inside = [&](int y, int x) {
    return y >= 0 && y < h && x >= 0 && x < w && mask.label(y, x) == object_id;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!inside(y, x)) continue;
      if (!inside(y - 1, x) || !inside(y + 1, x) || !inside(y, x - 1) || !inside(y, x + 1))
        b[static_cast<std::size_t>(y) * w + x] = 1;
    }
  }
  return b;
}

namespace {

// Dilation by the disk {dx^2 + dy^2 <= tol^2}.
std::vector<std::uint8_t> Dilate(const std::vector<std::uint8_t>& src, int h, int w, double tol) {
  const int r = static_cast<int>(std::floor(tol));
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dx * dx + dy * dy <= tol * tol) offsets.emplace_back(dy, dx);

  std::vector<std::uint8_t> out(src.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!src[static_cast<std::size_t>(y) * w + x]) continue;
      for (const auto& [dy, dx] : offsets) {
        const int yy = y + dy;
        const int xx = x + dx;
        if (yy >= 0 && yy < h && xx >= 0 && xx < w) out[static_cast<std::size_t>(yy) * w + xx] = 1;
      }
    }
  }
  return out;
}

}  // namespace

double BoundaryF(const MaskMap& pred, const MaskMap& gt, int object_id, double tol) {
  CheckSameDims(pred, gt);
  Check(tol >= 0.0 && std::isfinite(tol), ErrorKind::kInvalidArgument,
        "boundary tolerance must be >= 0");
  const int h = pred.height();
  const int w = pred.width();
  const auto pb = BoundaryMap(pred, object_id);
  const auto gb = BoundaryMap(gt, object_id);
  const auto n_pred = std::count(pb.begin(), pb.end(), 1);
  const auto n_gt = std::count(gb.begin(), gb.end(), 1);
  if (n_pred == 0 && n_gt == 0) return 1.0;
  if (n_pred == 0 || n_gt == 0) return 0.0;

  const auto gd = Dilate(gb, h, w, tol);
  const auto pd = Dilate(pb, h, w, tol);
  std::size_t pred_hit = 0;
  std::size_t gt_hit = 0;
  for (std::size_t p = 0; p < pb.size(); ++p) {
    pred_hit += pb[p] && gd[p];
    gt_hit += gb[p] && pd[p];
  }
  const double precision = static_cast<double>(pred_hit) / static_cast<double>(n_pred);
  const double recall = static_cast<double>(gt_hit) / static_cast<double>(n_gt);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double DefaultBoundaryTolerance(int height, int width) {
  return std::ceil(0.008 * std::hypot(static_cast<double>(height), static_cast<double>(width)));
}

Summary Summarize(const std::vector<double>& values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

SequenceReport EvaluateSequence(const std::vector<MaskMap>& preds,
                                const std::vector<MaskMap>& gts,
                                const std::vector<int>& object_ids,
                                const std::vector<int>& exclude, double tol) {
  Check(preds.size() == gts.size(), ErrorKind::kInvalidArgument,
        "prediction/ground-truth length mismatch: " + std::to_string(preds.size()) + " vs " +
            std::to_string(gts.size()));
  Check(!object_ids.empty(), ErrorKind::kInvalidArgument, "no object ids to evaluate");
  const std::set<int> skip(exclude.begin(), exclude.end());

  SequenceReport report;
  std::vector<double> js, fs, jfs;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    if (skip.count(static_cast<int>(t)) || preds[t].empty()) continue;
    double j = 0.0;
    double f = 0.0;
    for (int id : object_ids) {
      j += Jaccard(preds[t], gts[t], id);
      f += BoundaryF(preds[t], gts[t], id, tol);
    }
    j /= static_cast<double>(object_ids.size());
    f /= static_cast<double>(object_ids.size());
    const FrameScore s{j, f, (j + f) / 2.0};
    report.frames.push_back(static_cast<int>(t));
    report.scores.push_back(s);
    js.push_back(s.j);
    fs.push_back(s.f);
    jfs.push_back(s.jf);
  }
  report.j = Summarize(js);
  report.f = Summarize(fs);
  report.jf = Summarize(jfs);
  return report;
}

std::string FormatReportTable(const SequenceReport& report) {
  std::ostringstream out;
  char line[128];
  if (!report.name.empty()) out << "sequence " << report.name << "\n";
  out << "frame        J        F      J&F\n";
  for (std::size_t i = 0; i < report.scores.size(); ++i) {
    const auto& s = report.scores[i];
    std::snprintf(line, sizeof(line), "%5d   %.4f   %.4f   %.4f\n", report.frames[i], s.j, s.f,
                  s.jf);
    out << line;
  }
  std::snprintf(line, sizeof(line), "mean(std)  J&F %.3f(%.3f)  J %.3f(%.3f)  F %.3f(%.3f)\n",
                report.jf.mean, report.jf.std, report.j.mean, report.j.std, report.f.mean,
                report.f.std);
  out << line;
  return out.str();
}

std::string FormatReportRecord(const SequenceReport& report) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "sequence=%s frames=%zu j_mean=%.17g j_std=%.17g f_mean=%.17g f_std=%.17g "
                "jf_mean=%.17g jf_std=%.17g",
                report.name.empty() ? "-" : report.name.c_str(), report.scores.size(),
                report.j.mean, report.j.std, report.f.mean, report.f.std, report.jf.mean,
                report.jf.std);
  return buf;
}

}  // namespace mosseg
