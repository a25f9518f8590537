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

// Acceptance suite: one pass/fail line per criterion, each backed by an
// oracle that does not share code with the engine path it checks.

#ifndef MOSSEG_BENCH_HPP_
#define MOSSEG_BENCH_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "config.hpp"

namespace mosseg {

struct CriterionResult {
  std::string name;
  bool passed = false;
  std::string detail;
  std::string digest;  // hash of every output the suite produced
  double seconds = 0.0;
};

struct BenchOptions {
  std::string cli_path;               // empty: run the pipeline in-process
  std::filesystem::path scratch_dir;  // empty: a fresh temp directory
};

/// 64-bit FNV-1a over raw bytes; doubles hash by bit pattern.
class Digest {
 public:
  void Add(const void* data, std::size_t n);
  void Add(double v);
  void Add(std::int64_t v);
  void Add(const MaskMap& m);
  std::string Hex() const;

 private:
  std::uint64_t h_ = 1469598103934665603ull;
};

// Individual suites. Each one is deterministic and self-contained.
CriterionResult CheckMemoryAlgebra();
CriterionResult CheckConsolidationTrace();
CriterionResult CheckTracking();
CriterionResult CheckStaticFixedPoint();
CriterionResult CheckBidirectionalIdentity();
CriterionResult CheckVolumePropagation();
CriterionResult CheckMetricOracle();
CriterionResult CheckAdapterLaws();
CriterionResult CheckCliPipeline(const BenchOptions& opts);

/// Scene and settings shared by the tracking and pipeline criteria.
std::string TrackingSpecText();
std::string TrackingConfigText();

/// Runs every suite twice (determinism) plus the pipeline; reports each
/// criterion as soon as it is decided.
std::vector<CriterionResult> RunAcceptance(
    const BenchOptions& opts, const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS name  detail" / "FAIL name  detail".
std::string FormatCriterion(const CriterionResult& r);

}  // namespace mosseg

#endif  // MOSSEG_BENCH_HPP_
