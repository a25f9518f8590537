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

#include "config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "error.hpp"
#include "png_io.hpp"

namespace mosseg {

namespace {

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string Real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void BadKey(const std::string& key, const std::string& why) {
  Fail(ErrorKind::kInvalidArgument, "config key '" + key + "': " + why);
}

std::string ReadText(const std::filesystem::path& path) {
  const Bytes bytes = ReadFileBytes(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace

std::vector<KeyValue> ParseKeyValues(std::string_view text) {
  std::vector<KeyValue> out;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string trimmed = Trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    Check(eq != std::string::npos, ErrorKind::kInvalidArgument,
          "line " + std::to_string(line_no) + ": expected key=value, got '" + trimmed + "'");
    KeyValue kv{line_no, Trim(std::string_view(trimmed).substr(0, eq)),
                Trim(std::string_view(trimmed).substr(eq + 1))};
    Check(!kv.key.empty(), ErrorKind::kInvalidArgument,
          "line " + std::to_string(line_no) + ": missing key before '='");
    if (!seen.insert(kv.key).second) BadKey(kv.key, "duplicate key");
    out.push_back(std::move(kv));
  }
  return out;
}

int ParseIntValue(const std::string& key, const std::string& value) {
  int v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (value.empty() || ec != std::errc() || ptr != end)
    BadKey(key, "expected an integer, got '" + value + "'");
  return v;
}

double ParseRealValue(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (value.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    BadKey(key, "expected a finite number, got '" + value + "'");
  return v;
}

std::string Resolution::ToString() const {
  if (native) return "native";
  return std::to_string(height) + "x" + std::to_string(width);
}

Resolution Resolution::Parse(const std::string& text) {
  if (text == "native") return {true, 0, 0};
  Resolution r;
  const auto x = text.find('x');
  if (x == std::string::npos) {
    r.height = r.width = ParseIntValue("resolution", text);
  } else {
    r.height = ParseIntValue("resolution", text.substr(0, x));
    r.width = ParseIntValue("resolution", text.substr(x + 1));
  }
  if (r.height < 1 || r.width < 1 || r.height > 8192 || r.width > 8192)
    BadKey("resolution", "dimensions must lie in [1, 8192], got '" + text + "'");
  return r;
}

void RunConfig::Validate() const {
  propagation.Validate();
  if (metric_tol && !(*metric_tol >= 0.0)) BadKey("metric_tol", "must be >= 0");
}

void ApplyConfigKey(RunConfig& cfg, const std::string& key, const std::string& value,
                    const std::filesystem::path& base_dir) {
  PropagationConfig& p = cfg.propagation;
  MemoryConfig& m = p.memory;
  EncoderConfig& e = p.encoder;
  auto positive_int = [&] {
    const int v = ParseIntValue(key, value);
    if (v < 1) BadKey(key, "must be >= 1, got " + value);
    return v;
  };
  auto unit_open = [&] {
    const double v = ParseRealValue(key, value);
    if (!(v > 0.0 && v < 1.0)) BadKey(key, "must lie in (0, 1), got " + value);
    return v;
  };
  auto unit_closed = [&] {
    const double v = ParseRealValue(key, value);
    if (!(v >= 0.0 && v <= 1.0)) BadKey(key, "must lie in [0, 1], got " + value);
    return v;
  };

  if (key == "r") {
    m.r = positive_int();
  } else if (key == "t_min") {
    m.t_min = positive_int();
  } else if (key == "t_max") {
    m.t_max = positive_int();
  } else if (key == "prototypes" || key == "P") {
    m.prototypes = positive_int();
  } else if (key == "ltm_capacity") {
    m.ltm_capacity = positive_int();
  } else if (key == "top_k") {
    if (value == "none") m.top_k.reset();
    else m.top_k = positive_int();
  } else if (key == "affinity_scale") {
    m.affinity_scale = ParseRealValue(key, value);
    if (!(m.affinity_scale > 0.0)) BadKey(key, "must be > 0, got " + value);
  } else if (key == "similarity") {
    if (value == "neg_sq_l2") m.similarity = Similarity::kNegSquaredL2;
    else if (value == "dot") m.similarity = Similarity::kDot;
    else BadKey(key, "expected neg_sq_l2 or dot, got '" + value + "'");
  } else if (key == "stride") {
    e.stride = ParseIntValue(key, value);
    if (e.stride != 1 && e.stride != 2 && e.stride != 4 && e.stride != 8)
      BadKey(key, "must be one of 1, 2, 4, 8, got " + value);
  } else if (key == "key_channels") {
    e.key_channels = positive_int();
  } else if (key == "feature_channels") {
    e.feature_channels = positive_int();
  } else if (key == "gradient_bins") {
    e.gradient_bins = positive_int();
  } else if (key == "coord_weight") {
    e.coord_weight = ParseRealValue(key, value);
    if (e.coord_weight < 0.0) BadKey(key, "must be >= 0, got " + value);
  } else if (key == "alpha") {
    p.alpha = ParseRealValue(key, value);
    if (p.alpha < 0.0) BadKey(key, "must be >= 0, got " + value);
  } else if (key == "adapter") {
    if (value.empty() || value == "none") {
      p.adapter.reset();
      cfg.adapter_path.clear();
    } else {
      std::filesystem::path path(value);
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      try {
        p.adapter = LoadAdapter(path);
      } catch (const Error& err) {
        BadKey(key, err.what());
      }
      p.alpha = p.adapter->alpha;
      cfg.adapter_path = value;
    }
  } else if (key == "direction") {
    try {
      p.direction = ParseDirection(value);
    } catch (const Error& err) {
      BadKey(key, err.what());
    }
  } else if (key == "w_readout") {
    p.w_readout = unit_closed();
    p.w_sensory = 1.0 - p.w_readout;
  } else if (key == "w_sensory") {
    p.w_sensory = unit_closed();
    p.w_readout = 1.0 - p.w_sensory;
  } else if (key == "threshold") {
    p.threshold = unit_open();
  } else if (key == "sensory_update_gate") {
    p.sensory_update_gate = unit_open();
  } else if (key == "deep_update_gate") {
    p.deep_update_gate = unit_open();
  } else if (key == "sensory_gain") {
    p.sensory_gain = ParseRealValue(key, value);
  } else if (key == "resolution") {
    cfg.resolution = Resolution::Parse(value);
  } else if (key == "metric_tol") {
    cfg.metric_tol = ParseRealValue(key, value);
    if (*cfg.metric_tol < 0.0) BadKey(key, "must be >= 0, got " + value);
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else {
    Fail(ErrorKind::kInvalidArgument, "unknown config key '" + key + "'");
  }
}

RunConfig ParseRunConfig(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  const auto kvs = ParseKeyValues(text);
  for (const auto& kv : kvs) ApplyConfigKey(cfg, kv.key, kv.value, base_dir);

  // An explicit alpha wins over the adapter file's, whatever the key order.
  for (const auto& kv : kvs)
    if (kv.key == "alpha") ApplyConfigKey(cfg, kv.key, kv.value, base_dir);

  std::optional<double> readout, sensory;
  for (const auto& kv : kvs) {
    if (kv.key == "w_readout") readout = ParseRealValue(kv.key, kv.value);
    if (kv.key == "w_sensory") sensory = ParseRealValue(kv.key, kv.value);
  }
  if (readout && sensory) {
    if (std::abs(*readout + *sensory - 1.0) > 1e-9)
      BadKey("w_sensory", "w_readout + w_sensory must equal 1");
    cfg.propagation.w_readout = *readout;
    cfg.propagation.w_sensory = *sensory;
  }

  const MemoryConfig& m = cfg.propagation.memory;
  if (m.t_min >= m.t_max) BadKey("t_min", "t_min must be < t_max");
  const EncoderConfig& e = cfg.propagation.encoder;
  if (e.key_channels != e.feature_channels)
    BadKey("key_channels", "key_channels must equal feature_channels");
  if (e.gradient_bins % 2 != 0) BadKey("gradient_bins", "must be even");
  if (e.descriptor_channels() > e.key_channels)
    BadKey("key_channels", "too small for " + std::to_string(e.gradient_bins) +
                               " gradient bins (need " +
                               std::to_string(e.descriptor_channels()) + ")");
  if (cfg.propagation.adapter &&
      cfg.propagation.adapter->channels != e.feature_channels)
    BadKey("adapter", "adapter channel count does not match feature_channels");
  cfg.Validate();
  return cfg;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadText(path);
  } catch (const Error&) {
    Fail(ErrorKind::kIo, "cannot read config file " + path.string());
  }
  return ParseRunConfig(text, path.parent_path());
}

std::string FormatRunConfig(const RunConfig& cfg) {
  const PropagationConfig& p = cfg.propagation;
  const MemoryConfig& m = p.memory;
  const EncoderConfig& e = p.encoder;
  std::ostringstream out;
  out << "r=" << m.r << "\n"
      << "t_min=" << m.t_min << "\n"
      << "t_max=" << m.t_max << "\n"
      << "prototypes=" << m.prototypes << "\n"
      << "ltm_capacity=" << m.ltm_capacity << "\n"
      << "top_k=" << (m.top_k ? std::to_string(*m.top_k) : std::string("none")) << "\n"
      << "affinity_scale=" << Real(m.affinity_scale) << "\n"
      << "similarity=" << (m.similarity == Similarity::kDot ? "dot" : "neg_sq_l2") << "\n"
      << "stride=" << e.stride << "\n"
      << "key_channels=" << e.key_channels << "\n"
      << "feature_channels=" << e.feature_channels << "\n"
      << "gradient_bins=" << e.gradient_bins << "\n"
      << "coord_weight=" << Real(e.coord_weight) << "\n"
      << "alpha=" << Real(p.alpha) << "\n";
  if (!cfg.adapter_path.empty()) out << "adapter=" << cfg.adapter_path << "\n";
  out << "direction=" << ToString(p.direction) << "\n"
      << "w_readout=" << Real(p.w_readout) << "\n"
      << "w_sensory=" << Real(p.w_sensory) << "\n"
      << "threshold=" << Real(p.threshold) << "\n"
      << "sensory_update_gate=" << Real(p.sensory_update_gate) << "\n"
      << "deep_update_gate=" << Real(p.deep_update_gate) << "\n"
      << "sensory_gain=" << Real(p.sensory_gain) << "\n"
      << "resolution=" << cfg.resolution.ToString() << "\n";
  if (cfg.metric_tol) out << "metric_tol=" << Real(*cfg.metric_tol) << "\n";
  if (!cfg.output_dir.empty()) out << "output_dir=" << cfg.output_dir << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------

std::string FormatAdapter(const AdapterParams& p) {
  std::ostringstream out;
  out << "alpha=" << Real(p.alpha) << "\n";
  out << "channels=" << p.channels << "\n";
  out << "map=";
  for (std::size_t i = 0; i < p.map.size(); ++i) out << (i ? " " : "") << Real(p.map[i]);
  out << "\nbias=";
  for (std::size_t i = 0; i < p.bias.size(); ++i) out << (i ? " " : "") << Real(p.bias[i]);
  out << "\n";
  return out.str();
}

namespace {

std::vector<double> ParseReals(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::istringstream in(value);
  std::string tok;
  while (in >> tok) out.push_back(ParseRealValue(key, tok));
  return out;
}

}  // namespace

AdapterParams ParseAdapter(std::string_view text) {
  AdapterParams p;
  bool has_alpha = false, has_channels = false, has_map = false, has_bias = false;
  for (const auto& kv : ParseKeyValues(text)) {
    if (kv.key == "alpha") {
      p.alpha = ParseRealValue(kv.key, kv.value);
      has_alpha = true;
    } else if (kv.key == "channels") {
      p.channels = ParseIntValue(kv.key, kv.value);
      if (p.channels < 1 || p.channels > 4096) BadKey(kv.key, "must lie in [1, 4096]");
      has_channels = true;
    } else if (kv.key == "map") {
      p.map = ParseReals(kv.key, kv.value);
      has_map = true;
    } else if (kv.key == "bias") {
      p.bias = ParseReals(kv.key, kv.value);
      has_bias = true;
    } else {
      Fail(ErrorKind::kInvalidArgument, "unknown adapter key '" + kv.key + "'");
    }
  }
  if (!has_alpha) BadKey("alpha", "missing");
  if (!has_channels) BadKey("channels", "missing");
  if (!has_map) BadKey("map", "missing");
  if (!has_bias) BadKey("bias", "missing");
  const auto c = static_cast<std::size_t>(p.channels);
  if (p.map.size() != c * c)
    BadKey("map", "expected " + std::to_string(c * c) + " values, got " +
                      std::to_string(p.map.size()));
  if (p.bias.size() != c)
    BadKey("bias", "expected " + std::to_string(c) + " values, got " +
                       std::to_string(p.bias.size()));
  return p;
}

AdapterParams LoadAdapter(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadText(path);
  } catch (const Error&) {
    Fail(ErrorKind::kIo, "cannot read adapter file " + path.string());
  }
  return ParseAdapter(text);
}

void SaveAdapter(const std::filesystem::path& path, const AdapterParams& p) {
  const std::string text = FormatAdapter(p);
  WriteFileBytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace mosseg
