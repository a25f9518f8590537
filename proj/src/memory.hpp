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

// Three-tier attention memory.
//
// Reading: W = softmax_i(sim(k_i, q_j)) per query column, F = v W.
// Working memory holds whole frames (key/value/usage per position) and is
// bounded in [t_min, t_max] frames. When an append would exceed t_max, every
// frame except the annotated one and the newest t_min - 1 is compressed into
// long-term memory: the most used candidates become prototypes and their
// values are re-read from all candidates (potentiation).

#ifndef MOSSEG_MEMORY_HPP_
#define MOSSEG_MEMORY_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "grid.hpp"

namespace mosseg {

enum class Similarity { kNegSquaredL2, kDot };

struct AffinityOptions {
  std::optional<int> top_k;
  double scale = 1.0;  // multiplies the similarity before the softmax
  Similarity similarity = Similarity::kNegSquaredL2;
};

/// N_mem x N_query matrix; each column is a distribution over memory rows.
/// Columns keep only their nonzero entries, rows ascending.
class AffinityMatrix {
 public:
  struct Entry {
    int row = 0;
    double weight = 0.0;
  };

  AffinityMatrix() = default;
  explicit AffinityMatrix(int rows) : rows_(rows) {}

  int rows() const { return rows_; }
  int cols() const { return static_cast<int>(offsets_.size()) - 1; }

  /// Appends the next column. Entries must have ascending rows.
  void AppendColumn(std::span<const Entry> entries);

  std::span<const Entry> entries(int j) const {
    return {entries_.data() + offsets_[j], offsets_[j + 1] - offsets_[j]};
  }
  /// Weight at (i, j); zero when the row is not stored.
  double at(int i, int j) const;
  std::vector<double> DenseColumn(int j) const;

 private:
  int rows_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<Entry> entries_;
};

/// Value matrix (channels x columns), columns contiguous.
struct ValueSet {
  int channels = 0;
  int columns = 0;
  std::vector<double> data;

  static ValueSet FromGrid(const FeatureGrid& grid);
  std::span<const double> column(int j) const {
    return {data.data() + static_cast<std::size_t>(j) * channels,
            static_cast<std::size_t>(channels)};
  }
  friend bool operator==(const ValueSet&, const ValueSet&) = default;
};

struct MemoryEntry {
  std::vector<double> key;
  std::vector<double> value;
  double usage = 0.0;
  KeyOrigin origin;
};

AffinityMatrix Affinity(const FlatKeySet& memory_keys, const FlatKeySet& queries,
                        const AffinityOptions& opts = {});

/// F = values * W, one output column per query.
ValueSet ReadoutColumns(const ValueSet& values, const AffinityMatrix& w);
FeatureGrid Readout(const ValueSet& values, const AffinityMatrix& w, int height, int width);

/// Indices of the min(P, n) largest usages, usage descending, ties to the
/// lower index.
std::vector<int> PrototypeSelect(std::span<const double> usage, int count);
std::vector<int> PrototypeSelect(std::span<const MemoryEntry> candidates, int count);

/// v^p = v^c W(k^c, k^p): candidates act as memory, prototypes as queries.
ValueSet Potentiate(const FlatKeySet& candidate_keys, const ValueSet& candidate_values,
                    const FlatKeySet& prototype_keys, const AffinityOptions& opts = {});

// ---------------------------------------------------------------------------
// GRU

/// Standard GRU over [input; hidden]. Weight matrices are hidden x
/// (input + hidden), row-major.
struct GruParams {
  int input_dim = 0;
  int hidden_dim = 0;
  std::vector<double> w_update, w_reset, w_candidate;
  std::vector<double> b_update, b_reset, b_candidate;

  static GruParams Zeros(int input_dim, int hidden_dim);
  /// Untrained default: constant update gate z, candidate tanh(gain * (2x - 1))
  /// on the matching input channel, so the state is an exponential moving
  /// average of the squashed input. Requires input_dim == hidden_dim.
  static GruParams Smoother(int dim, double update_gate, double gain);
  void Validate() const;
};

/// One step. x.size() == input_dim, h.size() == hidden_dim.
std::vector<double> GruStep(const GruParams& p, std::span<const double> x,
                            std::span<const double> h);

struct SensoryState {
  FeatureGrid h;  // hidden_dim x grid height x grid width
  GruParams fast;
  GruParams deep;
};

/// Per-position gru step with the fast cell (every frame).
void SensoryUpdate(SensoryState& state, const FeatureGrid& decoder_feats);
/// Per-position gru step with the deep cell (memory frames only).
void SensoryDeepUpdate(SensoryState& state, const FeatureGrid& value);

// ---------------------------------------------------------------------------
// Working / long-term memory

struct FrameGroup {
  int frame = 0;
  FlatKeySet keys;
  ValueSet values;
  std::vector<double> usage;

  int size() const { return keys.columns; }
};

class WorkingMemory {
 public:
  WorkingMemory(int t_min, int t_max, int r);

  int t_min() const { return t_min_; }
  int t_max() const { return t_max_; }
  int r() const { return r_; }
  int frame_count() const { return static_cast<int>(groups_.size()); }
  int entry_count() const;
  const std::vector<FrameGroup>& groups() const { return groups_; }
  std::vector<FrameGroup>& mutable_groups() { return groups_; }
  MemoryEntry Entry(int index) const;

  /// Appends a frame group with zero usage. Requires frame_count() < t_max.
  void AppendFrame(FlatKeySet keys, ValueSet values, int frame);

  /// usage_i += (sum_j W_ij) / N_query for the first entry_count() rows of W.
  void RecordUsage(const AffinityMatrix& w);

 private:
  int t_min_;
  int t_max_;
  int r_;
  std::vector<FrameGroup> groups_;
};

struct LongTermMemory {
  int capacity = 512;
  int prototypes_per_consolidation = 32;
  FlatKeySet keys;
  ValueSet values;
  std::vector<double> usage;  // frozen at selection time

  int size() const { return keys.columns; }
};

struct MemoryConfig {
  int r = 5;
  int t_min = 5;
  int t_max = 10;
  int prototypes = 32;
  int ltm_capacity = 512;
  std::optional<int> top_k = 30;
  double affinity_scale = 1.0;
  Similarity similarity = Similarity::kNegSquaredL2;

  void Validate() const;
  AffinityOptions read_options() const { return {top_k, affinity_scale, similarity}; }
  AffinityOptions potentiation_options() const {
    return {std::nullopt, affinity_scale, similarity};
  }
};

/// Moves candidate frames of a full working memory into long-term memory.
/// Returns the number of prototypes added.
int Consolidate(WorkingMemory& working, LongTermMemory& ltm, const AffinityOptions& opts);

/// Bookkeeping of the most recent consolidation (not serialized).
struct ConsolidationTrace {
  int working_before = 0;  // frame groups before consolidating
  int working_after = 0;   // after consolidating, before the new append
  int ltm_before = 0;
  int ltm_after = 0;
  int prototypes = 0;
  int first_group_frame = 0;  // frame of group 0 after consolidating
};

class MemoryBank {
 public:
  explicit MemoryBank(const MemoryConfig& cfg);

  const MemoryConfig& config() const { return cfg_; }
  const WorkingMemory& working() const { return working_; }
  const LongTermMemory& long_term() const { return ltm_; }
  WorkingMemory& mutable_working() { return working_; }
  LongTermMemory& mutable_long_term() { return ltm_; }

  /// Working-memory keys followed by long-term keys.
  FlatKeySet AllKeys() const;
  ValueSet AllValues() const;

  AffinityMatrix Read(const FlatKeySet& queries) const;
  void RecordUsage(const AffinityMatrix& w) { working_.RecordUsage(w); }

  /// Consolidates first when working memory is at t_max. Returns the number
  /// of prototypes added when a consolidation ran.
  std::optional<int> Append(FlatKeySet keys, ValueSet values, int frame);
  const std::optional<ConsolidationTrace>& last_consolidation() const { return trace_; }

  void Serialize(std::ostream& out) const;
  static MemoryBank Deserialize(std::istream& in);

 private:
  MemoryConfig cfg_;
  WorkingMemory working_;
  LongTermMemory ltm_;
  std::optional<ConsolidationTrace> trace_;
};

}  // namespace mosseg

#endif  // MOSSEG_MEMORY_HPP_
