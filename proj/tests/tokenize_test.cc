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

#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lexveil/error.hpp"
#include "lexveil/tokenize.hpp"

namespace lexveil {
namespace {

std::vector<std::string> Surfaces(const std::vector<TokenSpan>& spans) {
  std::vector<std::string> out;
  out.reserve(spans.size());
  for (const auto& span : spans) out.emplace_back(span.surface);
  return out;
}

TEST(TokenizeTest, SplitsOnAsciiWhitespace) {
  const auto spans = Tokenize("the quick\tbrown\nfox");
  EXPECT_EQ(Surfaces(spans),
            (std::vector<std::string>{"the", "quick", "brown", "fox"}));
}

TEST(TokenizeTest, RecordsByteOffsets) {
  const std::string text = "ab  cd";
  const auto spans = Tokenize(text);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].begin, 0u);
  EXPECT_EQ(spans[0].end, 2u);
  EXPECT_EQ(spans[1].begin, 4u);
  EXPECT_EQ(spans[1].end, 6u);
  EXPECT_EQ(text.substr(spans[1].begin, spans[1].end - spans[1].begin), "cd");
}

TEST(TokenizeTest, HandlesUnicodeWhitespaceAndContent) {
  // em space (U+2003) and ideographic space (U+3000) both separate tokens;
  // multi-byte content stays intact.
  const std::string text = "caf\xC3\xA9\xE2\x80\x83\xE4\xB8\xAD\xE6\x96\x87"
                           "\xE3\x80\x80\xF0\x9F\x98\x80";
  const auto spans = Tokenize(text);
  EXPECT_EQ(Surfaces(spans),
            (std::vector<std::string>{"caf\xC3\xA9", "\xE4\xB8\xAD\xE6\x96\x87",
                                      "\xF0\x9F\x98\x80"}));
}

TEST(TokenizeTest, EmptyAndAllWhitespaceInputs) {
  EXPECT_TRUE(Tokenize("").empty());
  EXPECT_TRUE(Tokenize(" \t\n\xC2\xA0").empty());
}

TEST(TokenizeTest, LeadingAndTrailingWhitespace) {
  const auto spans = Tokenize("  x  ");
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].surface, "x");
  EXPECT_EQ(spans[0].begin, 2u);
}

TEST(TokenizeTest, RejectsInvalidUtf8WithOffset) {
  try {
    Tokenize("ok \xFF bad");
    FAIL() << "expected a parse error";
  } catch (const Error& error) {
    EXPECT_EQ(error.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(error.what()).find("3"), std::string::npos)
        << error.what();
  }
}

TEST(DetokenizeTest, IdentityWhenNothingChanges) {
  const std::string text = "  keep \t all\nof it  ";
  const auto spans = Tokenize(text);
  std::vector<std::string> replacements;
  for (const auto& span : spans) replacements.emplace_back(span.surface);
  EXPECT_EQ(Detokenize(text, spans, replacements), text);
}

TEST(DetokenizeTest, PreservesWhitespaceAroundReplacements) {
  const std::string text = " a\t\tbb\n c ";
  const auto spans = Tokenize(text);
  ASSERT_EQ(spans.size(), 3u);
  const std::vector<std::string> replacements{"XX", "y", "zzzz"};
  EXPECT_EQ(Detokenize(text, spans, replacements), " XX\t\ty\n zzzz ");
}

TEST(DetokenizeTest, HandlesMultibyteReplacements) {
  const std::string text = "one\xE2\x80\x83two";
  const auto spans = Tokenize(text);
  const std::vector<std::string> replacements{"\xE4\xB8\xAD", "t"};
  EXPECT_EQ(Detokenize(text, spans, replacements),
            "\xE4\xB8\xAD\xE2\x80\x83t");
}

TEST(DetokenizeTest, RejectsCountMismatch) {
  const std::string text = "a b";
  const auto spans = Tokenize(text);
  const std::vector<std::string> wrong{"only"};
  EXPECT_THROW(Detokenize(text, spans, wrong), Error);
}

}  // namespace
}  // namespace lexveil
