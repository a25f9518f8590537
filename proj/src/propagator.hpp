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

// Per-frame propagation loop: encode, read memory, decode, update memories.

#ifndef MOSSEG_PROPAGATOR_HPP_
#define MOSSEG_PROPAGATOR_HPP_

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "encoder.hpp"
#include "grid.hpp"
#include "memory.hpp"

namespace mosseg {

enum class Direction { kForward, kBackward, kBoth };

std::string ToString(Direction d);
Direction ParseDirection(const std::string& s);

struct PropagationConfig {
  MemoryConfig memory{.affinity_scale = 50.0};
  EncoderConfig encoder;
  // Applied when an adapter is loaded; alpha overrides adapter->alpha.
  double alpha = 0.0;
  std::optional<AdapterParams> adapter;
  Direction direction = Direction::kForward;
  double w_readout = 0.8;
  double w_sensory = 0.2;
  double threshold = 0.5;
  // Untrained sensory GRUs (see GruParams::Smoother).
  double sensory_update_gate = 0.3;
  double deep_update_gate = 0.5;
  double sensory_gain = 2.0;

  void Validate() const;
};

struct ConsolidationEvent {
  int frame = 0;
  int prototypes = 0;
  friend bool operator==(const ConsolidationEvent&, const ConsolidationEvent&) = default;
};

/// Stride-resolution soft values plus the full-resolution mask they decode to.
struct Decoded {
  MaskMap mask;
  FeatureGrid soft;  // one channel per object
};

/// soft_l = w_readout * F_l + w_sensory * sigmoid(h_l) at stride resolution,
/// bilinearly upsampled, then aggregated per pixel by a softmax over
/// {2 * threshold - max_l soft_l, soft_1, ..., soft_L}. Ties go to background.
Decoded Decode(const FeatureGrid& readout_labels, const FeatureGrid& hidden,
               const std::vector<int>& object_ids, const PropagationConfig& cfg, int height,
               int width);

/// One propagation direction. Session index 0 is the annotated frame; frame
/// labels are origin + step * index in the caller's sequence numbering.
class Session {
 public:
  Session(const GrayImage& annotated_frame, const MaskMap& annotation,
          const PropagationConfig& cfg, int origin = 0, int step = 1);

  /// Consumes the frame with the given absolute label; it must be the next
  /// one in session order.
  MaskMap Step(const GrayImage& frame, int frame_label);

  int next_frame() const { return origin_ + step_ * (index_ + 1); }
  int frames_processed() const { return index_ + 1; }
  const std::vector<int>& object_ids() const { return object_ids_; }
  const MemoryBank& bank() const { return bank_; }
  const SensoryState& sensory() const { return sensory_; }
  const std::vector<ConsolidationEvent>& events() const { return events_; }
  const PropagationConfig& config() const { return cfg_; }

  void Serialize(std::ostream& out) const;
  static Session Deserialize(std::istream& in);

 private:
  Session(PropagationConfig cfg, MemoryBank bank);
  void Remember(const FeatureGrid& feat, const FlatKeySet& keys, const MaskMap& mask,
                int frame_label);

  PropagationConfig cfg_;
  MemoryBank bank_;
  SensoryState sensory_;
  std::vector<int> object_ids_;
  int height_ = 0;
  int width_ = 0;
  int origin_ = 0;
  int step_ = 1;
  int index_ = 0;
  std::vector<ConsolidationEvent> events_;
};

struct SessionResult {
  std::vector<MaskMap> masks;         // one per frame, sequence order
  std::vector<double> frame_seconds;  // wall time per frame (0 for the annotation)
  std::vector<ConsolidationEvent> events;

  // Timing is excluded from equality.
  bool SameOutput(const SessionResult& other) const {
    return masks == other.masks && events == other.events;
  }
};

using FrameCallback = std::function<void(int frame, const MaskMap& mask)>;

/// Propagates the annotation through frames in the configured direction(s).
/// on_frame (optional) sees every emitted mask as soon as it is produced.
SessionResult Run(const std::vector<GrayImage>& frames, int annotated_index,
                  const MaskMap& annotation, const PropagationConfig& cfg,
                  const FrameCallback& on_frame = {});

}  // namespace mosseg

#endif  // MOSSEG_PROPAGATOR_HPP_
