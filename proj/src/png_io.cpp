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

#include "png_io.hpp"

#include <png.h>

#include <atomic>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <system_error>

#include "error.hpp"

namespace mosseg {

namespace {

struct ErrorSink {
  char msg[256] = "";
};

void OnError(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->msg, sizeof(sink->msg), "%s", msg);
  png_longjmp(png, 1);
}

void OnWarning(png_structp, png_const_charp) {}

struct ReadCursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void ReadChunk(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (n > cur->size - cur->pos) png_error(png, "unexpected end of data");
  std::memcpy(out, cur->data + cur->pos, n);
  cur->pos += n;
}

void WriteChunk(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void FlushNothing(png_structp) {}

enum class Mode { kIntensity, kLabels };

struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;  // row-major, channels interleaved
};

constexpr std::size_t kMaxPixels = std::size_t{1} << 28;

// libpng reports errors through longjmp. Everything with a destructor lives
// in this frame and is constructed before setjmp.
bool DecodeRaw(std::span<const std::uint8_t> data, Mode mode, RawImage& raw, ErrorSink& err) {
  if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8) != 0) {
    std::snprintf(err.msg, sizeof(err.msg), "not a PNG file");
    return false;
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, OnError, OnWarning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  ReadCursor cursor{data.data(), data.size(), 0};
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &cursor, ReadChunk);
  png_read_info(png, info);
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (width == 0 || height == 0 || static_cast<std::size_t>(width) * height > kMaxPixels)
    png_error(png, "image dimensions out of range");

  if (bit_depth == 16) png_set_strip_16(png);
  if (mode == Mode::kIntensity) {
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
  } else {
    if (color_type != PNG_COLOR_TYPE_PALETTE && color_type != PNG_COLOR_TYPE_GRAY)
      png_error(png, "mask must be a single-channel indexed or grayscale image");
    if (bit_depth < 8) png_set_packing(png);
  }
  png_read_update_info(png, info);

  raw.width = static_cast<int>(width);
  raw.height = static_cast<int>(height);
  raw.channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  raw.pixels.assign(row_bytes * height, 0);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.pixels.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool EncodeRaw(int width, int height, bool palette, const std::uint8_t* pixels, Bytes& out,
               ErrorSink& err) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, OnError, OnWarning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  std::vector<png_bytep> rows(height);
  std::vector<png_color> colors(256);

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, WriteChunk, FlushNothing);
  png_set_IHDR(png, info, width, height, 8, palette ? PNG_COLOR_TYPE_PALETTE : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (palette) {
    // Bit-interleaved label colours, the usual VOS palette.
    for (int i = 0; i < 256; ++i) {
      int c = i;
      png_byte r = 0, g = 0, b = 0;
      for (int j = 0; j < 8; ++j) {
        r |= ((c >> 0) & 1) << (7 - j);
        g |= ((c >> 1) & 1) << (7 - j);
        b |= ((c >> 2) & 1) << (7 - j);
        c >>= 3;
      }
      colors[i] = {r, g, b};
    }
    png_set_PLTE(png, info, colors.data(), 256);
  }
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(pixels + static_cast<std::size_t>(y) * width);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

[[noreturn]] void FailDecode(const ErrorSink& err) {
  Fail(ErrorKind::kFormat, std::string("undecodable image: ") +
                               (err.msg[0] ? err.msg : "libpng failure"));
}

}  // namespace

GrayImage DecodeGrayPng(std::span<const std::uint8_t> png) {
  RawImage raw;
  ErrorSink err;
  if (!DecodeRaw(png, Mode::kIntensity, raw, err)) FailDecode(err);
  GrayImage img(1, raw.height, raw.width);
  auto dst = img.data();
  const std::size_t n = dst.size();
  if (raw.channels == 1) {
    for (std::size_t p = 0; p < n; ++p) dst[p] = raw.pixels[p];
  } else if (raw.channels == 3) {
    for (std::size_t p = 0; p < n; ++p) {
      const auto* px = &raw.pixels[3 * p];
      dst[p] = std::round(0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]);
    }
  } else {
    Fail(ErrorKind::kFormat, "undecodable image: unsupported channel count " +
                                 std::to_string(raw.channels));
  }
  return img;
}

MaskMap DecodeMaskPng(std::span<const std::uint8_t> png) {
  RawImage raw;
  ErrorSink err;
  if (!DecodeRaw(png, Mode::kLabels, raw, err)) FailDecode(err);
  Check(raw.channels == 1, ErrorKind::kFormat, "mask must be single-channel");
  return MaskMap::FromLabels(raw.height, raw.width, std::move(raw.pixels));
}

Bytes EncodeGrayPng(const GrayImage& image) {
  Check(image.channels() == 1 && !image.empty(), ErrorKind::kInvalidArgument,
        "expected a non-empty single-channel image");
  std::vector<std::uint8_t> px(image.size());
  for (std::size_t p = 0; p < px.size(); ++p) {
    const double v = image.data()[p];
    px[p] = static_cast<std::uint8_t>(std::isfinite(v) ? std::clamp(std::round(v), 0.0, 255.0)
                                                       : 0.0);
  }
  Bytes out;
  ErrorSink err;
  if (!EncodeRaw(image.width(), image.height(), false, px.data(), out, err))
    Fail(ErrorKind::kInternal, std::string("png encode failed: ") + err.msg);
  return out;
}

Bytes EncodeMaskPng(const MaskMap& mask) {
  Check(!mask.empty(), ErrorKind::kInvalidArgument, "cannot encode an empty mask");
  Bytes out;
  ErrorSink err;
  if (!EncodeRaw(mask.width(), mask.height(), true, mask.labels().data(), out, err))
    Fail(ErrorKind::kInternal, std::string("png encode failed: ") + err.msg);
  return out;
}

Bytes ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Check(in.good(), ErrorKind::kIo, "cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Check(!in.bad(), ErrorKind::kIo, "read failed: " + path.string());
  return bytes;
}

void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  static std::atomic<unsigned long> counter{0};
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    Check(out.good(), ErrorKind::kIo, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    Check(out.good(), ErrorKind::kIo, "write failed: " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    Fail(ErrorKind::kIo, "cannot write " + path.string());
  }
}

GrayImage ReadGrayPng(const std::filesystem::path& path) {
  try {
    return DecodeGrayPng(ReadFileBytes(path));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kFormat) throw;
    Fail(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

MaskMap ReadMaskPng(const std::filesystem::path& path) {
  try {
    return DecodeMaskPng(ReadFileBytes(path));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kFormat) throw;
    Fail(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

void WriteGrayPng(const std::filesystem::path& path, const GrayImage& image) {
  WriteFileBytes(path, EncodeGrayPng(image));
}

void WriteMaskPng(const std::filesystem::path& path, const MaskMap& mask) {
  WriteFileBytes(path, EncodeMaskPng(mask));
}

}  // namespace mosseg
