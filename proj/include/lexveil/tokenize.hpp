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

#ifndef LEXVEIL_TOKENIZE_HPP_
#define LEXVEIL_TOKENIZE_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "lexveil/detail/utf8.hpp"
#include "lexveil/error.hpp"

namespace lexveil {

// A maximal run of non-whitespace bytes. [begin, end) are byte offsets into
// the original text, so the text between consecutive spans is exactly the
// whitespace to reproduce on output. Punctuation stays attached to its token.
struct TokenSpan {
  std::string_view surface;
  size_t begin;
  size_t end;
};

// Splits on Unicode whitespace. Rejects invalid UTF-8.
inline std::vector<TokenSpan> Tokenize(std::string_view text) {
  std::vector<TokenSpan> spans;
  size_t pos = 0;
  size_t token_begin = 0;
  bool in_token = false;
  while (pos < text.size()) {
    const size_t cp_begin = pos;
    const uint32_t cp = detail::DecodeUtf8(text, pos);
    const bool ws = detail::IsUnicodeWhitespace(cp);
    if (ws && in_token) {
      spans.push_back(
          {text.substr(token_begin, cp_begin - token_begin), token_begin,
           cp_begin});
      in_token = false;
    } else if (!ws && !in_token) {
      token_begin = cp_begin;
      in_token = true;
    }
  }
  if (in_token) {
    spans.push_back(
        {text.substr(token_begin, text.size() - token_begin), token_begin,
         text.size()});
  }
  return spans;
}

// Rebuilds a document from per-token replacement surfaces, copying the
// original inter-token whitespace byte for byte.
inline std::string Detokenize(std::string_view original,
                              const std::vector<TokenSpan>& spans,
                              const std::vector<std::string>& replacements) {
  if (replacements.size() != spans.size()) {
    Fail(ErrorKind::kStructure,
         "replacement count does not match token count");
  }
  std::string out;
  out.reserve(original.size());
  size_t cursor = 0;
  for (size_t i = 0; i < spans.size(); ++i) {
    out.append(original.substr(cursor, spans[i].begin - cursor));
    out.append(replacements[i]);
    cursor = spans[i].end;
  }
  out.append(original.substr(cursor));
  return out;
}

}  // namespace lexveil

#endif  // LEXVEIL_TOKENIZE_HPP_
