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

#ifndef LEXVEIL_DETAIL_UTF8_HPP_
#define LEXVEIL_DETAIL_UTF8_HPP_

#include <cstdint>
#include <string_view>

#include "lexveil/error.hpp"

namespace lexveil::detail {

// Decodes the code point starting at byte offset `pos`, advancing `pos` past
// it. Rejects overlong forms, surrogates, and values beyond U+10FFFF.
inline uint32_t DecodeUtf8(std::string_view text, size_t& pos) {
  const auto byte = [&](size_t i) -> uint32_t {
    return static_cast<uint8_t>(text[i]);
  };
  const auto malformed = [&]() {
    Fail(ErrorKind::kParse,
         "invalid UTF-8 at byte offset " + std::to_string(pos));
  };

  const uint32_t b0 = byte(pos);
  if (b0 < 0x80) {
    pos += 1;
    return b0;
  }

  size_t length = 0;
  uint32_t code_point = 0;
  if ((b0 & 0xE0) == 0xC0) {
    length = 2;
    code_point = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    length = 3;
    code_point = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    length = 4;
    code_point = b0 & 0x07;
  } else {
    malformed();
  }

  if (pos + length > text.size()) malformed();
  for (size_t i = 1; i < length; ++i) {
    const uint32_t b = byte(pos + i);
    if ((b & 0xC0) != 0x80) malformed();
    code_point = (code_point << 6) | (b & 0x3F);
  }

  static constexpr uint32_t kMinForLength[5] = {0, 0, 0x80, 0x800, 0x10000};
  if (code_point < kMinForLength[length]) malformed();           // overlong
  if (code_point >= 0xD800 && code_point <= 0xDFFF) malformed();  // surrogate
  if (code_point > 0x10FFFF) malformed();

  pos += length;
  return code_point;
}

// Unicode White_Space property.
inline bool IsUnicodeWhitespace(uint32_t cp) {
  switch (cp) {
    case 0x0009:
    case 0x000A:
    case 0x000B:
    case 0x000C:
    case 0x000D:
    case 0x0020:
    case 0x0085:
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

}  // namespace lexveil::detail

#endif  // LEXVEIL_DETAIL_UTF8_HPP_
