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

#include "memory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "binary_io.hpp"
#include "error.hpp"

namespace mosseg {

ValueSet ValueSet::FromGrid(const FeatureGrid& grid) {
  const FlatKeySet flat = Flatten(grid);
  return {flat.key_channels, flat.columns, flat.data};
}

namespace {

double Score(std::span<const double> k, std::span<const double> q, Similarity kind) {
  double s = 0.0;
  if (kind == Similarity::kDot) {
    for (std::size_t c = 0; c < k.size(); ++c) s += k[c] * q[c];
    return s;
  }
  for (std::size_t c = 0; c < k.size(); ++c) {
    const double d = k[c] - q[c];
    s += d * d;
  }
  return -s;
}

}  // namespace

void AffinityMatrix::AppendColumn(std::span<const Entry> entries) {
  entries_.insert(entries_.end(), entries.begin(), entries.end());
  offsets_.push_back(entries_.size());
}

double AffinityMatrix::at(int i, int j) const {
  const auto col = entries(j);
  const auto it = std::lower_bound(col.begin(), col.end(), i,
                                   [](const Entry& e, int row) { return e.row < row; });
  return it != col.end() && it->row == i ? it->weight : 0.0;
}

std::vector<double> AffinityMatrix::DenseColumn(int j) const {
  std::vector<double> out(rows_, 0.0);
  for (const auto& e : entries(j)) out[e.row] = e.weight;
  return out;
}

AffinityMatrix Affinity(const FlatKeySet& memory_keys, const FlatKeySet& queries,
                        const AffinityOptions& opts) {
  Check(memory_keys.columns >= 1, ErrorKind::kInvalidArgument, "empty memory");
  Check(memory_keys.key_channels == queries.key_channels, ErrorKind::kInvalidArgument,
        "key channel mismatch between memory and queries");
  Check(!opts.top_k || *opts.top_k >= 1, ErrorKind::kInvalidArgument, "top_k must be >= 1");

  const int n = memory_keys.columns;
  AffinityMatrix w(n);
  std::vector<double> sims(n);
  std::vector<int> order(n);
  std::vector<AffinityMatrix::Entry> col;
  for (int j = 0; j < queries.columns; ++j) {
    const auto q = queries.column(j);
    for (int i = 0; i < n; ++i)
      sims[i] = opts.scale * Score(memory_keys.column(i), q, opts.similarity);

    const int keep = opts.top_k ? std::min(*opts.top_k, n) : n;
    std::iota(order.begin(), order.end(), 0);
    if (keep < n) {
      // Larger similarity first; equal similarities keep the lower index.
      std::nth_element(order.begin(), order.begin() + keep, order.end(), [&](int a, int b) {
        return sims[a] > sims[b] || (sims[a] == sims[b] && a < b);
      });
      std::sort(order.begin(), order.begin() + keep);
    }
    double max_sim = -INFINITY;
    for (int t = 0; t < keep; ++t) max_sim = std::max(max_sim, sims[order[t]]);
    double total = 0.0;
    col.resize(keep);
    for (int t = 0; t < keep; ++t) {
      const double e = std::exp(sims[order[t]] - max_sim);
      col[t] = {order[t], e};
      total += e;
    }
    for (auto& e : col) e.weight /= total;
    w.AppendColumn(col);
  }
  return w;
}

ValueSet ReadoutColumns(const ValueSet& values, const AffinityMatrix& w) {
  Check(values.columns == w.rows(), ErrorKind::kInvalidArgument,
        "readout dimension mismatch: " + std::to_string(values.columns) + " value columns vs " +
            std::to_string(w.rows()) + " affinity rows");
  ValueSet out{values.channels, w.cols(),
               std::vector<double>(static_cast<std::size_t>(values.channels) * w.cols(), 0.0)};
  for (int j = 0; j < w.cols(); ++j) {
    double* dst = out.data.data() + static_cast<std::size_t>(j) * values.channels;
    for (const auto& e : w.entries(j)) {
      const auto v = values.column(e.row);
      for (int c = 0; c < values.channels; ++c) dst[c] += e.weight * v[c];
    }
  }
  return out;
}

FeatureGrid Readout(const ValueSet& values, const AffinityMatrix& w, int height, int width) {
  Check(w.cols() == height * width, ErrorKind::kInvalidArgument,
        "query count does not match readout grid");
  const ValueSet cols = ReadoutColumns(values, w);
  FlatKeySet flat{cols.channels, cols.columns, cols.data, {}};
  return Unflatten(flat, height, width);
}

std::vector<int> PrototypeSelect(std::span<const double> usage, int count) {
  Check(count >= 1, ErrorKind::kInvalidArgument, "prototype count must be >= 1");
  std::vector<int> idx(usage.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t keep = std::min(idx.size(), static_cast<std::size_t>(count));
  std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(), [&](int a, int b) {
    return usage[a] > usage[b] || (usage[a] == usage[b] && a < b);
  });
  idx.resize(keep);
  return idx;
}

std::vector<int> PrototypeSelect(std::span<const MemoryEntry> candidates, int count) {
  std::vector<double> usage;
  usage.reserve(candidates.size());
  for (const auto& e : candidates) usage.push_back(e.usage);
  return PrototypeSelect(usage, count);
}

ValueSet Potentiate(const FlatKeySet& candidate_keys, const ValueSet& candidate_values,
                    const FlatKeySet& prototype_keys, const AffinityOptions& opts) {
  if (prototype_keys.columns == 0) return {candidate_values.channels, 0, {}};
  Check(candidate_keys.columns == candidate_values.columns, ErrorKind::kInvalidArgument,
        "candidate key/value count mismatch");
  return ReadoutColumns(candidate_values, Affinity(candidate_keys, prototype_keys, opts));
}

// ---------------------------------------------------------------------------

GruParams GruParams::Zeros(int input_dim, int hidden_dim) {
  GruParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const std::size_t n = static_cast<std::size_t>(hidden_dim) * (input_dim + hidden_dim);
  p.w_update.assign(n, 0.0);
  p.w_reset.assign(n, 0.0);
  p.w_candidate.assign(n, 0.0);
  p.b_update.assign(hidden_dim, 0.0);
  p.b_reset.assign(hidden_dim, 0.0);
  p.b_candidate.assign(hidden_dim, 0.0);
  return p;
}

GruParams GruParams::Smoother(int dim, double update_gate, double gain) {
  Check(update_gate > 0.0 && update_gate < 1.0, ErrorKind::kInvalidArgument,
        "update gate must lie in (0, 1)");
  GruParams p = Zeros(dim, dim);
  const double logit = std::log(update_gate / (1.0 - update_gate));
  const int stride = 2 * dim;
  for (int i = 0; i < dim; ++i) {
    p.b_update[i] = logit;
    p.w_candidate[static_cast<std::size_t>(i) * stride + i] = 2.0 * gain;
    p.b_candidate[i] = -gain;
  }
  return p;
}

void GruParams::Validate() const {
  const std::size_t n = static_cast<std::size_t>(hidden_dim) * (input_dim + hidden_dim);
  Check(input_dim >= 0 && hidden_dim >= 1, ErrorKind::kInvalidArgument, "bad GRU dimensions");
  Check(w_update.size() == n && w_reset.size() == n && w_candidate.size() == n &&
            b_update.size() == static_cast<std::size_t>(hidden_dim) &&
            b_reset.size() == static_cast<std::size_t>(hidden_dim) &&
            b_candidate.size() == static_cast<std::size_t>(hidden_dim),
        ErrorKind::kInvalidArgument, "GRU parameter shapes inconsistent with dimensions");
}

namespace {

double Sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// tanh saturates to exactly +-1 in double precision; keep the state open.
double BoundedTanh(double v) {
  constexpr double kEdge = 1.0 - 0x1p-53;
  return std::clamp(std::tanh(v), -kEdge, kEdge);
}

}  // namespace

std::vector<double> GruStep(const GruParams& p, std::span<const double> x,
                            std::span<const double> h) {
  Check(x.size() == static_cast<std::size_t>(p.input_dim) &&
            h.size() == static_cast<std::size_t>(p.hidden_dim),
        ErrorKind::kInvalidArgument, "GRU input/hidden shape mismatch");
  const int ni = p.input_dim;
  const int nh = p.hidden_dim;
  const int row = ni + nh;

  std::vector<double> z(nh), rho(nh);
  for (int i = 0; i < nh; ++i) {
    const double* wz = p.w_update.data() + static_cast<std::size_t>(i) * row;
    const double* wr = p.w_reset.data() + static_cast<std::size_t>(i) * row;
    double az = p.b_update[i];
    double ar = p.b_reset[i];
    for (int j = 0; j < ni; ++j) {
      az += wz[j] * x[j];
      ar += wr[j] * x[j];
    }
    for (int j = 0; j < nh; ++j) {
      az += wz[ni + j] * h[j];
      ar += wr[ni + j] * h[j];
    }
    z[i] = Sigmoid(az);
    rho[i] = Sigmoid(ar);
  }

  std::vector<double> out(nh);
  for (int i = 0; i < nh; ++i) {
    const double* wh = p.w_candidate.data() + static_cast<std::size_t>(i) * row;
    double a = p.b_candidate[i];
    for (int j = 0; j < ni; ++j) a += wh[j] * x[j];
    for (int j = 0; j < nh; ++j) a += wh[ni + j] * rho[j] * h[j];
    const double cand = BoundedTanh(a);
    out[i] = (1.0 - z[i]) * h[i] + z[i] * cand;
  }
  return out;
}

namespace {

void SensoryStep(FeatureGrid& h, const GruParams& p, const FeatureGrid& input) {
  Check(input.height() == h.height() && input.width() == h.width(), ErrorKind::kInvalidArgument,
        "sensory input grid does not match hidden state grid");
  Check(input.channels() == p.input_dim && h.channels() == p.hidden_dim,
        ErrorKind::kInvalidArgument, "sensory channel mismatch");
  std::vector<double> x(p.input_dim), hv(p.hidden_dim);
  for (int pos = 0; pos < h.plane_size(); ++pos) {
    for (int c = 0; c < p.input_dim; ++c) x[c] = input.plane(c)[pos];
    for (int c = 0; c < p.hidden_dim; ++c) hv[c] = h.plane(c)[pos];
    const auto next = GruStep(p, x, hv);
    for (int c = 0; c < p.hidden_dim; ++c) h.plane(c)[pos] = next[c];
  }
}

}  // namespace

void SensoryUpdate(SensoryState& state, const FeatureGrid& decoder_feats) {
  SensoryStep(state.h, state.fast, decoder_feats);
}

void SensoryDeepUpdate(SensoryState& state, const FeatureGrid& value) {
  SensoryStep(state.h, state.deep, value);
}

// ---------------------------------------------------------------------------

WorkingMemory::WorkingMemory(int t_min, int t_max, int r) : t_min_(t_min), t_max_(t_max), r_(r) {
  Check(t_min >= 1 && t_min < t_max, ErrorKind::kInvalidArgument,
        "working memory bounds require 1 <= t_min < t_max");
  Check(r >= 1, ErrorKind::kInvalidArgument, "r must be >= 1");
}

int WorkingMemory::entry_count() const {
  int n = 0;
  for (const auto& g : groups_) n += g.size();
  return n;
}

MemoryEntry WorkingMemory::Entry(int index) const {
  for (const auto& g : groups_) {
    if (index < g.size()) {
      const auto k = g.keys.column(index);
      const auto v = g.values.column(index);
      return {{k.begin(), k.end()}, {v.begin(), v.end()}, g.usage[index], g.keys.origin[index]};
    }
    index -= g.size();
  }
  Fail(ErrorKind::kInvalidArgument, "memory entry index out of range");
}

void WorkingMemory::AppendFrame(FlatKeySet keys, ValueSet values, int frame) {
  Check(frame_count() < t_max_, ErrorKind::kInvalidState,
        "working memory is at capacity; consolidate first");
  Check(keys.columns == values.columns, ErrorKind::kInvalidArgument,
        "key/value column count mismatch");
  if (!groups_.empty()) {
    Check(keys.key_channels == groups_.front().keys.key_channels &&
              values.channels == groups_.front().values.channels,
          ErrorKind::kInvalidArgument, "frame channel layout differs from memory");
  }
  for (auto& o : keys.origin) o.frame = frame;
  FrameGroup g;
  g.frame = frame;
  g.usage.assign(keys.columns, 0.0);
  g.keys = std::move(keys);
  g.values = std::move(values);
  groups_.push_back(std::move(g));
}

void WorkingMemory::RecordUsage(const AffinityMatrix& w) {
  const int n = entry_count();
  Check(w.rows() >= n, ErrorKind::kInvalidArgument,
        "affinity rows do not cover working memory entries");
  if (w.cols() == 0) return;
  std::vector<double> row_sum(n, 0.0);
  for (int j = 0; j < w.cols(); ++j) {
    for (const auto& e : w.entries(j))
      if (e.row < n) row_sum[e.row] += e.weight;
  }
  int i = 0;
  for (auto& g : groups_) {
    for (auto& u : g.usage) u += row_sum[i++] / w.cols();
  }
}

// ---------------------------------------------------------------------------

void MemoryConfig::Validate() const {
  Check(r >= 1, ErrorKind::kInvalidArgument, "r must be >= 1");
  Check(t_min >= 1 && t_min < t_max, ErrorKind::kInvalidArgument,
        "t_min/t_max require 1 <= t_min < t_max");
  Check(prototypes >= 1, ErrorKind::kInvalidArgument, "prototypes must be >= 1");
  Check(ltm_capacity >= 1, ErrorKind::kInvalidArgument, "ltm_capacity must be >= 1");
  Check(!top_k || *top_k >= 1, ErrorKind::kInvalidArgument, "top_k must be >= 1");
  Check(std::isfinite(affinity_scale) && affinity_scale > 0.0, ErrorKind::kInvalidArgument,
        "affinity_scale must be > 0");
}

namespace {

void AppendColumns(FlatKeySet& dst, const FlatKeySet& src, const std::vector<int>& idx) {
  if (dst.columns == 0) dst.key_channels = src.key_channels;
  for (int j : idx) {
    const auto c = src.column(j);
    dst.data.insert(dst.data.end(), c.begin(), c.end());
    dst.origin.push_back(src.origin[j]);
  }
  dst.columns += static_cast<int>(idx.size());
}

void AppendAll(FlatKeySet& dst, const FlatKeySet& src) {
  if (dst.columns == 0) dst.key_channels = src.key_channels;
  dst.data.insert(dst.data.end(), src.data.begin(), src.data.end());
  dst.origin.insert(dst.origin.end(), src.origin.begin(), src.origin.end());
  dst.columns += src.columns;
}

void AppendAll(ValueSet& dst, const ValueSet& src) {
  if (dst.columns == 0) dst.channels = src.channels;
  dst.data.insert(dst.data.end(), src.data.begin(), src.data.end());
  dst.columns += src.columns;
}

}  // namespace

int Consolidate(WorkingMemory& working, LongTermMemory& ltm, const AffinityOptions& opts) {
  Check(working.frame_count() == working.t_max(), ErrorKind::kInvalidState, "not at capacity");
  auto& groups = working.mutable_groups();
  const int last_candidate = working.t_max() - working.t_min();  // groups [1, last_candidate]

  FlatKeySet cand_keys;
  ValueSet cand_values;
  std::vector<double> cand_usage;
  for (int g = 1; g <= last_candidate; ++g) {
    AppendAll(cand_keys, groups[g].keys);
    AppendAll(cand_values, groups[g].values);
    cand_usage.insert(cand_usage.end(), groups[g].usage.begin(), groups[g].usage.end());
  }

  const auto chosen = PrototypeSelect(cand_usage, ltm.prototypes_per_consolidation);
  FlatKeySet proto_keys;
  AppendColumns(proto_keys, cand_keys, chosen);
  const ValueSet proto_values = Potentiate(cand_keys, cand_values, proto_keys, opts);

  AppendAll(ltm.keys, proto_keys);
  AppendAll(ltm.values, proto_values);
  for (int j : chosen) ltm.usage.push_back(cand_usage[j]);

  if (ltm.size() > ltm.capacity) {
    // Keep the highest-usage entries; among equal usage the older ones stay.
    const auto keep = PrototypeSelect(ltm.usage, ltm.capacity);
    std::vector<int> sorted_keep = keep;
    std::sort(sorted_keep.begin(), sorted_keep.end());
    LongTermMemory trimmed;
    trimmed.capacity = ltm.capacity;
    trimmed.prototypes_per_consolidation = ltm.prototypes_per_consolidation;
    AppendColumns(trimmed.keys, ltm.keys, sorted_keep);
    trimmed.values.channels = ltm.values.channels;
    for (int j : sorted_keep) {
      const auto v = ltm.values.column(j);
      trimmed.values.data.insert(trimmed.values.data.end(), v.begin(), v.end());
      trimmed.usage.push_back(ltm.usage[j]);
    }
    trimmed.values.columns = static_cast<int>(sorted_keep.size());
    ltm = std::move(trimmed);
  }

  groups.erase(groups.begin() + 1, groups.begin() + 1 + last_candidate);
  return static_cast<int>(chosen.size());
}

// ---------------------------------------------------------------------------

MemoryBank::MemoryBank(const MemoryConfig& cfg)
    : cfg_(cfg), working_(cfg.t_min, cfg.t_max, cfg.r) {
  cfg.Validate();
  ltm_.capacity = cfg.ltm_capacity;
  ltm_.prototypes_per_consolidation = cfg.prototypes;
}

FlatKeySet MemoryBank::AllKeys() const {
  FlatKeySet all;
  for (const auto& g : working_.groups()) AppendAll(all, g.keys);
  if (ltm_.size() > 0) AppendAll(all, ltm_.keys);
  return all;
}

ValueSet MemoryBank::AllValues() const {
  ValueSet all;
  for (const auto& g : working_.groups()) AppendAll(all, g.values);
  if (ltm_.size() > 0) AppendAll(all, ltm_.values);
  return all;
}

AffinityMatrix MemoryBank::Read(const FlatKeySet& queries) const {
  return Affinity(AllKeys(), queries, cfg_.read_options());
}

std::optional<int> MemoryBank::Append(FlatKeySet keys, ValueSet values, int frame) {
  std::optional<int> added;
  if (working_.frame_count() == working_.t_max()) {
    ConsolidationTrace t;
    t.working_before = working_.frame_count();
    t.ltm_before = ltm_.size();
    added = Consolidate(working_, ltm_, cfg_.potentiation_options());
    t.working_after = working_.frame_count();
    t.ltm_after = ltm_.size();
    t.prototypes = *added;
    t.first_group_frame = working_.groups().front().frame;
    trace_ = t;
  }
  working_.AppendFrame(std::move(keys), std::move(values), frame);
  return added;
}

// ---------------------------------------------------------------------------
// Snapshot layout: see docs/session-format.md.

namespace {

void WriteKeys(std::ostream& out, const FlatKeySet& k) {
  binary::WriteI64(out, k.key_channels);
  binary::WriteI64(out, k.columns);
  binary::WriteDoubles(out, k.data);
  for (const auto& o : k.origin) {
    binary::WriteI64(out, o.frame);
    binary::WriteI64(out, o.position);
  }
}

FlatKeySet ReadKeys(std::istream& in) {
  FlatKeySet k;
  k.key_channels = binary::ReadInt(in, 0, 1 << 20, "key_channels");
  k.columns = binary::ReadInt(in, 0, 1 << 28, "columns");
  k.data = binary::ReadDoubles(in);
  Check(k.data.size() == static_cast<std::size_t>(k.key_channels) * k.columns,
        ErrorKind::kFormat, "snapshot key matrix size mismatch");
  k.origin.resize(k.columns);
  for (auto& o : k.origin) {
    o.frame = binary::ReadInt(in, -(1 << 30), 1 << 30, "origin.frame");
    o.position = binary::ReadInt(in, 0, 1 << 30, "origin.position");
  }
  return k;
}

void WriteValues(std::ostream& out, const ValueSet& v) {
  binary::WriteI64(out, v.channels);
  binary::WriteI64(out, v.columns);
  binary::WriteDoubles(out, v.data);
}

ValueSet ReadValues(std::istream& in) {
  ValueSet v;
  v.channels = binary::ReadInt(in, 0, 1 << 20, "value channels");
  v.columns = binary::ReadInt(in, 0, 1 << 28, "value columns");
  v.data = binary::ReadDoubles(in);
  Check(v.data.size() == static_cast<std::size_t>(v.channels) * v.columns, ErrorKind::kFormat,
        "snapshot value matrix size mismatch");
  return v;
}

}  // namespace

void MemoryBank::Serialize(std::ostream& out) const {
  binary::WriteI64(out, cfg_.r);
  binary::WriteI64(out, cfg_.t_min);
  binary::WriteI64(out, cfg_.t_max);
  binary::WriteI64(out, cfg_.prototypes);
  binary::WriteI64(out, cfg_.ltm_capacity);
  binary::WriteI64(out, cfg_.top_k.value_or(0));
  binary::WriteF64(out, cfg_.affinity_scale);
  binary::WriteI64(out, cfg_.similarity == Similarity::kDot ? 1 : 0);

  binary::WriteI64(out, working_.frame_count());
  for (const auto& g : working_.groups()) {
    binary::WriteI64(out, g.frame);
    WriteKeys(out, g.keys);
    WriteValues(out, g.values);
    binary::WriteDoubles(out, g.usage);
  }
  WriteKeys(out, ltm_.keys);
  WriteValues(out, ltm_.values);
  binary::WriteDoubles(out, ltm_.usage);
}

MemoryBank MemoryBank::Deserialize(std::istream& in) {
  MemoryConfig cfg;
  cfg.r = binary::ReadInt(in, 1, 1 << 20, "r");
  cfg.t_min = binary::ReadInt(in, 1, 1 << 20, "t_min");
  cfg.t_max = binary::ReadInt(in, 2, 1 << 20, "t_max");
  cfg.prototypes = binary::ReadInt(in, 1, 1 << 24, "prototypes");
  cfg.ltm_capacity = binary::ReadInt(in, 1, 1 << 28, "ltm_capacity");
  const int top_k = binary::ReadInt(in, 0, 1 << 28, "top_k");
  cfg.top_k = top_k > 0 ? std::optional<int>(top_k) : std::nullopt;
  cfg.affinity_scale = binary::ReadF64(in);
  cfg.similarity = binary::ReadInt(in, 0, 1, "similarity") == 1 ? Similarity::kDot
                                                                 : Similarity::kNegSquaredL2;
  MemoryBank bank(cfg);

  const int frames = binary::ReadInt(in, 0, cfg.t_max, "working frame count");
  for (int f = 0; f < frames; ++f) {
    const int frame = binary::ReadInt(in, -(1 << 30), 1 << 30, "group frame");
    FlatKeySet keys = ReadKeys(in);
    ValueSet values = ReadValues(in);
    std::vector<double> usage = binary::ReadDoubles(in);
    Check(usage.size() == static_cast<std::size_t>(keys.columns), ErrorKind::kFormat,
          "snapshot usage length mismatch");
    bank.working_.AppendFrame(std::move(keys), std::move(values), frame);
    bank.working_.mutable_groups().back().usage = std::move(usage);
  }
  bank.ltm_.keys = ReadKeys(in);
  bank.ltm_.values = ReadValues(in);
  bank.ltm_.usage = binary::ReadDoubles(in);
  Check(bank.ltm_.values.columns == bank.ltm_.keys.columns &&
            bank.ltm_.usage.size() == static_cast<std::size_t>(bank.ltm_.keys.columns),
        ErrorKind::kFormat, "snapshot long-term memory inconsistent");
  return bank;
}

}  // namespace mosseg
