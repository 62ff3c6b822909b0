// Copyright 2026 The Lexveil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEXVEIL_DETAIL_IO_HPP_
#define LEXVEIL_DETAIL_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "lexveil/error.hpp"

namespace lexveil::detail {

// Little-endian primitives for the binary file and wire formats. Values are
// assembled byte by byte, so the encodings are identical on any host.

inline void WriteBytes(std::ostream& out, const void* data, size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) Fail(ErrorKind::kIo, "write failed");
}

inline void WriteU8(std::ostream& out, uint8_t value) {
  WriteBytes(out, &value, 1);
}

inline void WriteU16(std::ostream& out, uint16_t value) {
  uint8_t bytes[2] = {static_cast<uint8_t>(value),
                      static_cast<uint8_t>(value >> 8)};
  WriteBytes(out, bytes, 2);
}

inline void WriteU32(std::ostream& out, uint32_t value) {
  uint8_t bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<uint8_t>(value >> (8 * i));
  WriteBytes(out, bytes, 4);
}

inline void WriteU64(std::ostream& out, uint64_t value) {
  uint8_t bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<uint8_t>(value >> (8 * i));
  WriteBytes(out, bytes, 8);
}

inline void WriteF64(std::ostream& out, double value) {
  WriteU64(out, std::bit_cast<uint64_t>(value));
}

inline void WriteString(std::ostream& out, std::string_view value) {
  WriteU32(out, static_cast<uint32_t>(value.size()));
  WriteBytes(out, value.data(), value.size());
}

inline void ReadBytes(std::istream& in, void* data, size_t size,
                      const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (static_cast<size_t>(in.gcount()) != size) {
    Fail(ErrorKind::kFormat,
         std::string("truncated stream while reading ") + what);
  }
}

inline uint8_t ReadU8(std::istream& in, const char* what) {
  uint8_t value;
  ReadBytes(in, &value, 1, what);
  return value;
}

inline uint16_t ReadU16(std::istream& in, const char* what) {
  uint8_t bytes[2];
  ReadBytes(in, bytes, 2, what);
  return static_cast<uint16_t>(bytes[0] | (bytes[1] << 8));
}

inline uint32_t ReadU32(std::istream& in, const char* what) {
  uint8_t bytes[4];
  ReadBytes(in, bytes, 4, what);
  uint32_t value = 0;
  for (int i = 0; i < 4; ++i) value |= static_cast<uint32_t>(bytes[i]) << (8 * i);
  return value;
}

inline uint64_t ReadU64(std::istream& in, const char* what) {
  uint8_t bytes[8];
  ReadBytes(in, bytes, 8, what);
  uint64_t value = 0;
  for (int i = 0; i < 8; ++i) value |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  return value;
}

inline double ReadF64(std::istream& in, const char* what) {
  return std::bit_cast<double>(ReadU64(in, what));
}

inline std::string ReadString(std::istream& in, const char* what,
                              uint32_t max_size = 1u << 20) {
  const uint32_t size = ReadU32(in, what);
  if (size > max_size) {
    Fail(ErrorKind::kFormat,
         std::string("string length out of range while reading ") + what);
  }
  std::string value(size, '\0');
  if (size > 0) ReadBytes(in, value.data(), size, what);
  return value;
}

inline void ExpectMagic(std::istream& in, const char (&magic)[5],
                        const char* what) {
  char bytes[4];
  ReadBytes(in, bytes, 4, what);
  if (std::memcmp(bytes, magic, 4) != 0) {
    Fail(ErrorKind::kFormat, std::string("bad magic for ") + what);
  }
}

}  // namespace lexveil::detail

#endif  // LEXVEIL_DETAIL_IO_HPP_
