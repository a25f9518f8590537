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

// 8-bit PNG frames and indexed PNG masks (libpng).

#ifndef MOSSEG_PNG_IO_HPP_
#define MOSSEG_PNG_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "grid.hpp"

namespace mosseg {

using Bytes = std::vector<std::uint8_t>;

/// Any PNG colour type. RGB(A) and palette images are converted to luma
/// (0.299 R + 0.587 G + 0.114 B, rounded); alpha is ignored; 16-bit samples
/// keep their high byte.
GrayImage DecodeGrayPng(std::span<const std::uint8_t> png);
/// Single-channel indexed or grayscale PNG; the stored sample is the label.
MaskMap DecodeMaskPng(std::span<const std::uint8_t> png);

/// Values are rounded and clamped to [0, 255].
Bytes EncodeGrayPng(const GrayImage& image);
/// 8-bit palette PNG; pixel index == object id.
Bytes EncodeMaskPng(const MaskMap& mask);

Bytes ReadFileBytes(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

GrayImage ReadGrayPng(const std::filesystem::path& path);
MaskMap ReadMaskPng(const std::filesystem::path& path);
void WriteGrayPng(const std::filesystem::path& path, const GrayImage& image);
void WriteMaskPng(const std::filesystem::path& path, const MaskMap& mask);

}  // namespace mosseg

#endif  // MOSSEG_PNG_IO_HPP_
