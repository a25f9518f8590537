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

// Flat key=value configuration files: run settings and adapter parameters.

#ifndef MOSSEG_CONFIG_HPP_
#define MOSSEG_CONFIG_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "encoder.hpp"
#include "propagator.hpp"

namespace mosseg {

struct KeyValue {
  int line = 0;
  std::string key;
  std::string value;
};

/// Blank lines and '#' comments are ignored. Duplicate keys are rejected.
std::vector<KeyValue> ParseKeyValues(std::string_view text);

int ParseIntValue(const std::string& key, const std::string& value);
double ParseRealValue(const std::string& key, const std::string& value);

/// Working resolution of ingested frames.
struct Resolution {
  bool native = false;
  int height = 480;
  int width = 480;

  std::string ToString() const;
  static Resolution Parse(const std::string& text);  // "native", "N" or "HxW"
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

struct RunConfig {
  PropagationConfig propagation;
  Resolution resolution;
  std::optional<double> metric_tol;  // default: 0.8% of the diagonal
  std::string output_dir;
  std::string adapter_path;  // as written in the file

  void Validate() const;
};

/// Applies one key. Errors name the key.
void ApplyConfigKey(RunConfig& cfg, const std::string& key, const std::string& value,
                    const std::filesystem::path& base_dir = {});

/// Parses and validates a whole file. adapter paths resolve against base_dir.
RunConfig ParseRunConfig(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig LoadRunConfig(const std::filesystem::path& path);

/// Canonical text form; re-parses to an equal configuration.
std::string FormatRunConfig(const RunConfig& cfg);

std::string FormatAdapter(const AdapterParams& p);
AdapterParams ParseAdapter(std::string_view text);
AdapterParams LoadAdapter(const std::filesystem::path& path);
void SaveAdapter(const std::filesystem::path& path, const AdapterParams& p);

}  // namespace mosseg

#endif  // MOSSEG_CONFIG_HPP_
