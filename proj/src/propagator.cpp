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

#include "propagator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "binary_io.hpp"
#include "error.hpp"

namespace mosseg {

std::string ToString(Direction d) {
  switch (d) {
    case Direction::kForward:
      return "forward";
    case Direction::kBackward:
      return "backward";
    case Direction::kBoth:
      return "both";
  }
  return "forward";
}

Direction ParseDirection(const std::string& s) {
  if (s == "forward") return Direction::kForward;
  if (s == "backward") return Direction::kBackward;
  if (s == "both") return Direction::kBoth;
  Fail(ErrorKind::kInvalidArgument, "direction must be forward, backward or both, got '" + s + "'");
}

void PropagationConfig::Validate() const {
  memory.Validate();
  encoder.Validate();
  Check(std::isfinite(alpha) && alpha >= 0.0, ErrorKind::kInvalidArgument, "alpha must be >= 0");
  Check(w_readout >= 0.0 && w_sensory >= 0.0 && std::abs(w_readout + w_sensory - 1.0) < 1e-9,
        ErrorKind::kInvalidArgument, "w_readout + w_sensory must equal 1");
  Check(threshold > 0.0 && threshold < 1.0, ErrorKind::kInvalidArgument,
        "threshold must lie in (0, 1)");
  Check(sensory_update_gate > 0.0 && sensory_update_gate < 1.0 && deep_update_gate > 0.0 &&
            deep_update_gate < 1.0,
        ErrorKind::kInvalidArgument, "sensory update gates must lie in (0, 1)");
  Check(std::isfinite(sensory_gain), ErrorKind::kInvalidArgument, "sensory_gain must be finite");
  if (adapter) {
    Check(adapter->channels == encoder.feature_channels, ErrorKind::kInvalidArgument,
          "adapter channel count does not match feature_channels");
  }
}

Decoded Decode(const FeatureGrid& readout_labels, const FeatureGrid& hidden,
               const std::vector<int>& object_ids, const PropagationConfig& cfg, int height,
               int width) {
  const int num_objects = static_cast<int>(object_ids.size());
  Check(readout_labels.channels() == num_objects, ErrorKind::kInvalidArgument,
        "readout label channels do not match object count");
  Check(hidden.channels() == num_objects && hidden.height() == readout_labels.height() &&
            hidden.width() == readout_labels.width(),
        ErrorKind::kInvalidArgument, "sensory state does not match readout grid");

  FeatureGrid soft(num_objects, readout_labels.height(), readout_labels.width());
  for (std::size_t i = 0; i < soft.size(); ++i) {
    const double h = hidden.data()[i];
    soft.data()[i] = cfg.w_readout * readout_labels.data()[i] +
                     cfg.w_sensory * (1.0 / (1.0 + std::exp(-h)));
  }

  const int s = cfg.encoder.stride;
  const FeatureGrid up = ResizeBilinear(soft, soft.height() * s, soft.width() * s);
  const int n = height * width;
  const int planes = num_objects + 1;
  std::vector<double> probs(static_cast<std::size_t>(planes) * n);
  std::vector<double> logits(planes);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double best = -INFINITY;
      for (int k = 0; k < num_objects; ++k) {
        logits[k + 1] = up.at(k, y, x);
        best = std::max(best, logits[k + 1]);
      }
      logits[0] = 2.0 * cfg.threshold - best;
      const double m = *std::max_element(logits.begin(), logits.end());
      double total = 0.0;
      for (auto& l : logits) {
        l = std::exp(l - m);
        total += l;
      }
      const int p = y * width + x;
      for (int k = 0; k < planes; ++k) probs[static_cast<std::size_t>(k) * n + p] = logits[k] / total;
    }
  }
  return {MaskMap::FromProbs(height, width, object_ids, std::move(probs)), std::move(soft)};
}

// ---------------------------------------------------------------------------

namespace {

FeatureGrid SliceChannels(const FeatureGrid& g, int first, int count) {
  FeatureGrid out(count, g.height(), g.width());
  for (int c = 0; c < count; ++c) {
    const auto src = g.plane(first + c);
    std::copy(src.begin(), src.end(), out.plane(c).begin());
  }
  return out;
}

const AdapterParams* EffectiveAdapter(const PropagationConfig& cfg, AdapterParams& scratch) {
  if (!cfg.adapter) return nullptr;
  scratch = *cfg.adapter;
  scratch.alpha = cfg.alpha;
  return &scratch;
}

}  // namespace

Session::Session(PropagationConfig cfg, MemoryBank bank)
    : cfg_(std::move(cfg)), bank_(std::move(bank)) {}

Session::Session(const GrayImage& annotated_frame, const MaskMap& annotation,
                 const PropagationConfig& cfg, int origin, int step)
    : cfg_(cfg), bank_(cfg.memory), origin_(origin), step_(step) {
  cfg_.Validate();
  Check(step == 1 || step == -1, ErrorKind::kInvalidArgument, "session step must be +1 or -1");
  Check(annotation.height() == annotated_frame.height() &&
            annotation.width() == annotated_frame.width(),
        ErrorKind::kInvalidArgument, "annotation dims do not match frame dims");
  Check(annotation.HasForeground(), ErrorKind::kInvalidArgument, "empty annotation");

  height_ = annotated_frame.height();
  width_ = annotated_frame.width();
  object_ids_ = annotation.object_ids();
  const int n = static_cast<int>(object_ids_.size());

  AdapterParams scratch;
  const QueryEncoding enc =
      EncodeQuery(annotated_frame, cfg_.encoder, EffectiveAdapter(cfg_, scratch), origin_);
  sensory_.h = FeatureGrid(n, enc.feat.height(), enc.feat.width());
  sensory_.fast = GruParams::Smoother(n, cfg_.sensory_update_gate, cfg_.sensory_gain);
  sensory_.deep = GruParams::Smoother(n, cfg_.deep_update_gate, cfg_.sensory_gain);
  Remember(enc.feat, enc.keys, annotation.Hardened(), origin_);
}

void Session::Remember(const FeatureGrid& feat, const FlatKeySet& keys, const MaskMap& mask,
                       int frame_label) {
  const FeatureGrid value = EncodeValues(feat, mask, object_ids_, cfg_.encoder);
  const auto added = bank_.Append(keys, ValueSet::FromGrid(value), frame_label);
  if (added) events_.push_back({frame_label, *added});
  SensoryDeepUpdate(sensory_, SliceChannels(value, feat.channels(),
                                            static_cast<int>(object_ids_.size())));
}

MaskMap Session::Step(const GrayImage& frame, int frame_label) {
  Check(frame_label == next_frame(), ErrorKind::kInvalidState,
        "sequence order violation: expected frame " + std::to_string(next_frame()) + ", got " +
            std::to_string(frame_label));
  Check(frame.height() == height_ && frame.width() == width_, ErrorKind::kInvalidArgument,
        "frame dims differ from the annotated frame");
  ++index_;

  AdapterParams scratch;
  const QueryEncoding enc =
      EncodeQuery(frame, cfg_.encoder, EffectiveAdapter(cfg_, scratch), frame_label);
  const AffinityMatrix w = bank_.Read(enc.keys);
  bank_.RecordUsage(w);
  const FeatureGrid readout =
      Readout(bank_.AllValues(), w, enc.feat.height(), enc.feat.width());
  const FeatureGrid labels = SliceChannels(readout, enc.feat.channels(),
                                           static_cast<int>(object_ids_.size()));

  Decoded decoded = Decode(labels, sensory_.h, object_ids_, cfg_, height_, width_);
  SensoryUpdate(sensory_, decoded.soft);
  if (index_ % cfg_.memory.r == 0) Remember(enc.feat, enc.keys, decoded.mask.Hardened(), frame_label);
  return std::move(decoded.mask);
}

// ---------------------------------------------------------------------------
// Snapshot: see docs/session-format.md.

namespace {

constexpr char kMagic[8] = {'M', 'O', 'S', 'S', 'E', 'S', 'S', '\0'};
constexpr std::int64_t kVersion = 1;

void WriteGru(std::ostream& out, const GruParams& p) {
  binary::WriteI64(out, p.input_dim);
  binary::WriteI64(out, p.hidden_dim);
  for (const auto* v : {&p.w_update, &p.w_reset, &p.w_candidate, &p.b_update, &p.b_reset,
                        &p.b_candidate})
    binary::WriteDoubles(out, *v);
}

GruParams ReadGru(std::istream& in) {
  GruParams p;
  p.input_dim = binary::ReadInt(in, 0, 1 << 16, "gru input_dim");
  p.hidden_dim = binary::ReadInt(in, 1, 1 << 16, "gru hidden_dim");
  for (auto* v : {&p.w_update, &p.w_reset, &p.w_candidate, &p.b_update, &p.b_reset,
                  &p.b_candidate})
    *v = binary::ReadDoubles(in);
  p.Validate();
  return p;
}

void WriteGrid(std::ostream& out, const FeatureGrid& g) {
  binary::WriteI64(out, g.channels());
  binary::WriteI64(out, g.height());
  binary::WriteI64(out, g.width());
  binary::WriteDoubles(out, {g.data().begin(), g.data().end()});
}

FeatureGrid ReadGrid(std::istream& in) {
  const int c = binary::ReadInt(in, 0, 1 << 16, "grid channels");
  const int h = binary::ReadInt(in, 0, 1 << 16, "grid height");
  const int w = binary::ReadInt(in, 0, 1 << 16, "grid width");
  return FeatureGrid(c, h, w, binary::ReadDoubles(in));
}

}  // namespace

void Session::Serialize(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  binary::WriteI64(out, kVersion);

  const EncoderConfig& e = cfg_.encoder;
  binary::WriteI64(out, e.stride);
  binary::WriteI64(out, e.key_channels);
  binary::WriteI64(out, e.feature_channels);
  binary::WriteI64(out, e.gradient_bins);
  binary::WriteF64(out, e.coord_weight);
  binary::WriteF64(out, cfg_.alpha);
  binary::WriteI64(out, static_cast<std::int64_t>(cfg_.direction));
  binary::WriteF64(out, cfg_.w_readout);
  binary::WriteF64(out, cfg_.w_sensory);
  binary::WriteF64(out, cfg_.threshold);
  binary::WriteF64(out, cfg_.sensory_update_gate);
  binary::WriteF64(out, cfg_.deep_update_gate);
  binary::WriteF64(out, cfg_.sensory_gain);
  binary::WriteI64(out, cfg_.adapter ? 1 : 0);
  if (cfg_.adapter) {
    binary::WriteF64(out, cfg_.adapter->alpha);
    binary::WriteI64(out, cfg_.adapter->channels);
    binary::WriteDoubles(out, cfg_.adapter->map);
    binary::WriteDoubles(out, cfg_.adapter->bias);
  }

  binary::WriteI64(out, height_);
  binary::WriteI64(out, width_);
  binary::WriteI64(out, origin_);
  binary::WriteI64(out, step_);
  binary::WriteI64(out, index_);
  binary::WriteI64(out, static_cast<std::int64_t>(object_ids_.size()));
  for (int id : object_ids_) binary::WriteI64(out, id);
  binary::WriteI64(out, static_cast<std::int64_t>(events_.size()));
  for (const auto& ev : events_) {
    binary::WriteI64(out, ev.frame);
    binary::WriteI64(out, ev.prototypes);
  }
  WriteGrid(out, sensory_.h);
  WriteGru(out, sensory_.fast);
  WriteGru(out, sensory_.deep);
  bank_.Serialize(out);
}

Session Session::Deserialize(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  Check(in.gcount() == 8 && std::memcmp(magic, kMagic, 8) == 0, ErrorKind::kFormat,
        "not a session snapshot");
  const auto version = binary::ReadI64(in);
  Check(version == kVersion, ErrorKind::kFormat,
        "unsupported session snapshot version " + std::to_string(version));

  PropagationConfig cfg;
  cfg.encoder.stride = binary::ReadInt(in, 1, 8, "stride");
  cfg.encoder.key_channels = binary::ReadInt(in, 1, 1 << 16, "key_channels");
  cfg.encoder.feature_channels = binary::ReadInt(in, 1, 1 << 16, "feature_channels");
  cfg.encoder.gradient_bins = binary::ReadInt(in, 2, 1 << 16, "gradient_bins");
  cfg.encoder.coord_weight = binary::ReadF64(in);
  cfg.alpha = binary::ReadF64(in);
  cfg.direction = static_cast<Direction>(binary::ReadInt(in, 0, 2, "direction"));
  cfg.w_readout = binary::ReadF64(in);
  cfg.w_sensory = binary::ReadF64(in);
  cfg.threshold = binary::ReadF64(in);
  cfg.sensory_update_gate = binary::ReadF64(in);
  cfg.deep_update_gate = binary::ReadF64(in);
  cfg.sensory_gain = binary::ReadF64(in);
  if (binary::ReadInt(in, 0, 1, "adapter flag") == 1) {
    AdapterParams a;
    a.alpha = binary::ReadF64(in);
    a.channels = binary::ReadInt(in, 1, 1 << 16, "adapter channels");
    a.map = binary::ReadDoubles(in);
    a.bias = binary::ReadDoubles(in);
    cfg.adapter = std::move(a);
  }

  const int height = binary::ReadInt(in, 1, 1 << 16, "height");
  const int width = binary::ReadInt(in, 1, 1 << 16, "width");
  const int origin = binary::ReadInt(in, -(1 << 30), 1 << 30, "origin");
  const int step = binary::ReadInt(in, -1, 1, "step");
  const int index = binary::ReadInt(in, 0, 1 << 30, "index");
  std::vector<int> ids(binary::ReadInt(in, 1, 255, "object count"));
  for (auto& id : ids) id = binary::ReadInt(in, 1, 255, "object id");
  std::vector<ConsolidationEvent> events(binary::ReadInt(in, 0, 1 << 30, "event count"));
  for (auto& ev : events) {
    ev.frame = binary::ReadInt(in, -(1 << 30), 1 << 30, "event frame");
    ev.prototypes = binary::ReadInt(in, 0, 1 << 30, "event prototypes");
  }
  SensoryState sensory;
  sensory.h = ReadGrid(in);
  sensory.fast = ReadGru(in);
  sensory.deep = ReadGru(in);
  MemoryBank bank = MemoryBank::Deserialize(in);
  cfg.memory = bank.config();
  cfg.Validate();

  Session s(std::move(cfg), std::move(bank));
  s.sensory_ = std::move(sensory);
  s.object_ids_ = std::move(ids);
  s.height_ = height;
  s.width_ = width;
  s.origin_ = origin;
  s.step_ = step;
  s.index_ = index;
  s.events_ = std::move(events);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

void RunDirection(const std::vector<GrayImage>& frames, int annotated_index,
                  const MaskMap& annotation, const PropagationConfig& cfg, int step,
                  SessionResult& result, const FrameCallback& on_frame) {
  const int n = static_cast<int>(frames.size());
  const int next = annotated_index + step;
  if (next < 0 || next >= n) return;
  Session session(frames[annotated_index], annotation, cfg, annotated_index, step);
  for (int f = next; f >= 0 && f < n; f += step) {
    const auto t0 = Clock::now();
    MaskMap mask = session.Step(frames[f], f);
    result.frame_seconds[f] = std::chrono::duration<double>(Clock::now() - t0).count();
    if (on_frame) on_frame(f, mask);
    result.masks[f] = std::move(mask);
  }
  result.events.insert(result.events.end(), session.events().begin(), session.events().end());
}

}  // namespace

SessionResult Run(const std::vector<GrayImage>& frames, int annotated_index,
                  const MaskMap& annotation, const PropagationConfig& cfg,
                  const FrameCallback& on_frame) {
  cfg.Validate();
  Check(!frames.empty(), ErrorKind::kInvalidArgument, "empty sequence");
  Check(annotated_index >= 0 && annotated_index < static_cast<int>(frames.size()),
        ErrorKind::kInvalidArgument, "annotated frame index out of range");
  Check(annotation.height() == frames[annotated_index].height() &&
            annotation.width() == frames[annotated_index].width(),
        ErrorKind::kInvalidArgument, "annotation dims do not match frame dims");
  Check(annotation.HasForeground(), ErrorKind::kInvalidArgument, "empty annotation");

  SessionResult result;
  result.masks.resize(frames.size());
  result.frame_seconds.assign(frames.size(), 0.0);
  result.masks[annotated_index] = annotation;
  if (on_frame) on_frame(annotated_index, annotation);

  if (cfg.direction != Direction::kBackward)
    RunDirection(frames, annotated_index, annotation, cfg, +1, result, on_frame);
  if (cfg.direction != Direction::kForward)
    RunDirection(frames, annotated_index, annotation, cfg, -1, result, on_frame);
  return result;
}

}  // namespace mosseg
