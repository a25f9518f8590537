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

// Little-endian primitives for the session snapshot format.

#ifndef MOSSEG_BINARY_IO_HPP_
#define MOSSEG_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "error.hpp"

namespace mosseg::binary {

inline void WriteU64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

inline std::uint64_t ReadU64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  Check(in.gcount() == 8, ErrorKind::kFormat, "truncated snapshot");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

inline void WriteI64(std::ostream& out, std::int64_t v) {
  WriteU64(out, static_cast<std::uint64_t>(v));
}
inline std::int64_t ReadI64(std::istream& in) { return static_cast<std::int64_t>(ReadU64(in)); }

inline int ReadInt(std::istream& in, std::int64_t lo, std::int64_t hi, const char* what) {
  const std::int64_t v = ReadI64(in);
  Check(v >= lo && v <= hi, ErrorKind::kFormat, std::string("snapshot field out of range: ") + what);
  return static_cast<int>(v);
}

inline void WriteF64(std::ostream& out, double v) { WriteU64(out, std::bit_cast<std::uint64_t>(v)); }
inline double ReadF64(std::istream& in) { return std::bit_cast<double>(ReadU64(in)); }

inline void WriteDoubles(std::ostream& out, const std::vector<double>& v) {
  WriteU64(out, v.size());
  for (double d : v) WriteF64(out, d);
}

inline std::vector<double> ReadDoubles(std::istream& in, std::uint64_t max_len = 1ull << 32) {
  const std::uint64_t n = ReadU64(in);
  Check(n <= max_len, ErrorKind::kFormat, "snapshot array too long");
  std::vector<double> v(n);
  for (auto& d : v) d = ReadF64(in);
  return v;
}

}  // namespace mosseg::binary

#endif  // MOSSEG_BINARY_IO_HPP_
