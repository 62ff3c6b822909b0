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

#ifndef LEXVEIL_STORE_HPP_
#define LEXVEIL_STORE_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lexveil/detail/io.hpp"
#include "lexveil/detail/sha256.hpp"
#include "lexveil/detail/utf8.hpp"
#include "lexveil/error.hpp"

namespace lexveil {

// Token id reserved for out-of-vocabulary surfaces; never a store index.
inline constexpr uint32_t kOovId = 0xFFFFFFFFu;

enum class StoreFormat { kText, kBinary };

inline constexpr uint16_t kStoreFormatVersion = 1;

// Immutable vocabulary of tokens, one dense embedding row and one corpus
// frequency per token. Safe for concurrent reads once constructed.
class EmbeddingStore {
 public:
  EmbeddingStore(std::vector<std::string> surfaces, std::vector<double> matrix,
                 std::vector<uint64_t> frequencies, size_t dim)
      : surfaces_(std::move(surfaces)),
        matrix_(std::move(matrix)),
        frequencies_(std::move(frequencies)),
        dim_(dim) {
    Validate();
    NormalizeRows();
    ComputeChecksum();
  }

  static EmbeddingStore Load(std::istream& in, StoreFormat format) {
    return format == StoreFormat::kText ? LoadText(in) : LoadBinary(in);
  }

  size_t size() const { return surfaces_.size(); }
  size_t dim() const { return dim_; }

  const std::string& surface(uint32_t id) const { return surfaces_[id]; }
  uint64_t frequency(uint32_t id) const { return frequencies_[id]; }

  std::span<const double> vector(uint32_t id) const {
    return {matrix_.data() + static_cast<size_t>(id) * dim_, dim_};
  }

  // Unit-normalized row; cosine between tokens is the plain dot product of
  // these.
  std::span<const double> unit_vector(uint32_t id) const {
    return {unit_matrix_.data() + static_cast<size_t>(id) * dim_, dim_};
  }

  std::optional<uint32_t> Find(std::string_view surface) const {
    auto it = index_.find(std::string(surface));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // SHA-256 of the canonical binary serialization; identical content loaded
  // from either format yields the same digest.
  const detail::Sha256::Digest& checksum() const { return checksum_; }

  void Save(std::ostream& out, StoreFormat format) const {
    if (format == StoreFormat::kText) {
      SaveText(out);
    } else {
      SaveBinary(out);
    }
  }

 private:
  static EmbeddingStore LoadText(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
      Fail(ErrorKind::kParse, "line 1: missing header");
    }
    size_t dim = 0;
    size_t count = 0;
    ParseHeader(line, dim, count);

    std::vector<std::string> surfaces;
    std::vector<double> matrix;
    std::vector<uint64_t> frequencies;
    surfaces.reserve(count);
    matrix.reserve(count * dim);
    frequencies.reserve(count);

    size_t line_number = 1;
    while (std::getline(in, line)) {
      ++line_number;
      if (surfaces.size() == count) {
        Fail(ErrorKind::kStructure,
             "line " + std::to_string(line_number) +
                 ": more records than header count " + std::to_string(count));
      }
      ParseRecord(line, line_number, dim, surfaces, matrix, frequencies);
    }
    if (surfaces.size() != count) {
      Fail(ErrorKind::kStructure,
           "expected " + std::to_string(count) + " records, found " +
               std::to_string(surfaces.size()));
    }
    return EmbeddingStore(std::move(surfaces), std::move(matrix),
                          std::move(frequencies), dim);
  }

  static EmbeddingStore LoadBinary(std::istream& in) {
    detail::ExpectMagic(in, "SSHD", "store");
    const uint16_t version = detail::ReadU16(in, "store version");
    if (version != kStoreFormatVersion) {
      Fail(ErrorKind::kFormat,
           "unsupported store version " + std::to_string(version));
    }
    const uint32_t dim = detail::ReadU32(in, "store dimension");
    const uint32_t count = detail::ReadU32(in, "store count");

    std::vector<std::string> surfaces;
    std::vector<double> matrix;
    std::vector<uint64_t> frequencies;
    surfaces.reserve(count);
    matrix.reserve(static_cast<size_t>(count) * dim);
    frequencies.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
      surfaces.push_back(detail::ReadString(in, "token surface"));
      frequencies.push_back(detail::ReadU64(in, "token frequency"));
      for (uint32_t d = 0; d < dim; ++d) {
        matrix.push_back(detail::ReadF64(in, "embedding value"));
      }
    }
    return EmbeddingStore(std::move(surfaces), std::move(matrix),
                          std::move(frequencies), dim);
  }

  static void ParseHeader(std::string_view line, size_t& dim, size_t& count) {
    // `#dim=<D> count=<N>`
    const auto fail = [&] {
      Fail(ErrorKind::kParse,
           "line 1: expected header '#dim=<D> count=<N>', got '" +
               std::string(line) + "'");
    };
    if (!line.starts_with("#dim=")) fail();
    size_t pos = 5;
    const size_t space = line.find(' ', pos);
    if (space == std::string_view::npos) fail();
    if (!ParseUnsigned(line.substr(pos, space - pos), dim)) fail();
    std::string_view rest = line.substr(space + 1);
    if (!rest.starts_with("count=")) fail();
    if (!ParseUnsigned(rest.substr(6), count)) fail();
    if (dim < 1) {
      Fail(ErrorKind::kStructure, "line 1: dimension must be at least 1");
    }
  }

  static bool ParseUnsigned(std::string_view text, size_t& value) {
    if (text.empty()) return false;
    const auto result =
        std::from_chars(text.data(), text.data() + text.size(), value);
    return result.ec == std::errc() && result.ptr == text.data() + text.size();
  }

  static void ParseRecord(std::string_view line, size_t line_number,
                          size_t dim, std::vector<std::string>& surfaces,
                          std::vector<double>& matrix,
                          std::vector<uint64_t>& frequencies) {
    const std::string where = "line " + std::to_string(line_number);
    const size_t tab1 = line.find('\t');
    if (tab1 == std::string_view::npos) {
      Fail(ErrorKind::kParse, where + ": expected <surface>\\t<frequency>\\t<vector>");
    }
    const size_t tab2 = line.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos) {
      Fail(ErrorKind::kParse, where + ": missing vector field");
    }
    if (line.find('\t', tab2 + 1) != std::string_view::npos) {
      Fail(ErrorKind::kParse, where + ": too many fields");
    }

    const std::string_view surface = line.substr(0, tab1);
    if (surface.empty()) {
      Fail(ErrorKind::kParse, where + ": empty surface");
    }

    uint64_t frequency = 0;
    const std::string_view freq_text = line.substr(tab1 + 1, tab2 - tab1 - 1);
    const auto freq_result = std::from_chars(
        freq_text.data(), freq_text.data() + freq_text.size(), frequency);
    if (freq_result.ec != std::errc() ||
        freq_result.ptr != freq_text.data() + freq_text.size()) {
      Fail(ErrorKind::kParse,
           where + ": bad frequency '" + std::string(freq_text) + "'");
    }

    std::string_view vec_text = line.substr(tab2 + 1);
    size_t parsed = 0;
    size_t pos = 0;
    while (pos < vec_text.size()) {
      const size_t space = vec_text.find(' ', pos);
      const std::string_view field =
          space == std::string_view::npos
              ? vec_text.substr(pos)
              : vec_text.substr(pos, space - pos);
      double value = 0.0;
      const auto result =
          std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || result.ec != std::errc() ||
          result.ptr != field.data() + field.size()) {
        Fail(ErrorKind::kParse,
             where + ": bad vector value '" + std::string(field) + "'");
      }
      matrix.push_back(value);
      ++parsed;
      if (space == std::string_view::npos) break;
      pos = space + 1;
    }
    if (parsed != dim) {
      Fail(ErrorKind::kStructure, where + ": expected " + std::to_string(dim) +
                                      " vector values, found " +
                                      std::to_string(parsed));
    }

    surfaces.emplace_back(surface);
    frequencies.push_back(frequency);
  }

  void SaveText(std::ostream& out) const {
    out << "#dim=" << dim_ << " count=" << surfaces_.size() << '\n';
    char buffer[64];
    for (size_t i = 0; i < surfaces_.size(); ++i) {
      out << surfaces_[i] << '\t' << frequencies_[i] << '\t';
      for (size_t d = 0; d < dim_; ++d) {
        if (d > 0) out << ' ';
        // Shortest round-trip form: reloading reproduces the exact double,
        // and re-serializing reproduces the exact bytes.
        const auto result = std::to_chars(buffer, buffer + sizeof(buffer),
                                          matrix_[i * dim_ + d]);
        out.write(buffer, result.ptr - buffer);
      }
      out << '\n';
    }
    if (!out) Fail(ErrorKind::kIo, "write failed");
  }

  void SaveBinary(std::ostream& out) const {
    detail::WriteBytes(out, "SSHD", 4);
    detail::WriteU16(out, kStoreFormatVersion);
    detail::WriteU32(out, static_cast<uint32_t>(dim_));
    detail::WriteU32(out, static_cast<uint32_t>(surfaces_.size()));
    for (size_t i = 0; i < surfaces_.size(); ++i) {
      detail::WriteString(out, surfaces_[i]);
      detail::WriteU64(out, frequencies_[i]);
      for (size_t d = 0; d < dim_; ++d) {
        detail::WriteF64(out, matrix_[i * dim_ + d]);
      }
    }
  }

  void Validate() {
    if (dim_ < 1) {
      Fail(ErrorKind::kStructure, "embedding dimension must be at least 1");
    }
    if (surfaces_.size() != frequencies_.size() ||
        matrix_.size() != surfaces_.size() * dim_) {
      Fail(ErrorKind::kStructure,
           "token, frequency, and vector row counts disagree");
    }
    if (surfaces_.size() >= kOovId) {
      Fail(ErrorKind::kStructure, "vocabulary too large for 32-bit token ids");
    }
    index_.reserve(surfaces_.size());
    for (size_t i = 0; i < surfaces_.size(); ++i) {
      ValidateSurface(surfaces_[i]);
      if (!index_.emplace(surfaces_[i], static_cast<uint32_t>(i)).second) {
        Fail(ErrorKind::kValidation,
             "duplicate token surface '" + surfaces_[i] + "'");
      }
      for (size_t d = 0; d < dim_; ++d) {
        if (!std::isfinite(matrix_[i * dim_ + d])) {
          Fail(ErrorKind::kValidation,
               "non-finite embedding value in token '" + surfaces_[i] + "'");
        }
      }
    }
  }

  static void ValidateSurface(const std::string& surface) {
    size_t pos = 0;
    while (pos < surface.size()) {
      const uint32_t cp = detail::DecodeUtf8(surface, pos);
      if (detail::IsUnicodeWhitespace(cp)) {
        Fail(ErrorKind::kValidation,
             "token surface '" + surface + "' contains whitespace");
      }
    }
  }

  void NormalizeRows() {
    unit_matrix_.resize(matrix_.size());
    for (size_t i = 0; i < surfaces_.size(); ++i) {
      double sum_squares = 0.0;
      for (size_t d = 0; d < dim_; ++d) {
        const double v = matrix_[i * dim_ + d];
        sum_squares += v * v;
      }
      const double norm = std::sqrt(sum_squares);
      if (norm == 0.0) {
        Fail(ErrorKind::kValidation,
             "token '" + surfaces_[i] + "' has a zero embedding vector");
      }
      for (size_t d = 0; d < dim_; ++d) {
        unit_matrix_[i * dim_ + d] = matrix_[i * dim_ + d] / norm;
      }
    }
  }

  void ComputeChecksum() {
    std::ostringstream bytes;
    SaveBinary(bytes);
    checksum_ = detail::Sha256::Hash(bytes.str());
  }

  std::vector<std::string> surfaces_;
  std::vector<double> matrix_;
  std::vector<double> unit_matrix_;
  std::vector<uint64_t> frequencies_;
  std::unordered_map<std::string, uint32_t> index_;
  size_t dim_;
  detail::Sha256::Digest checksum_;
};

// Frequency-quantile split of a store's vocabulary. Tokens in the bottom-q
// quantile by corpus frequency are sensitive; the rest are not.
class SensitivityPartition {
 public:
  SensitivityPartition(std::vector<uint32_t> sensitive_ids, size_t vocab_size,
                       double quantile)
      : sensitive_ids_(std::move(sensitive_ids)),
        is_sensitive_(vocab_size, 0),
        quantile_(quantile) {
    for (uint32_t id : sensitive_ids_) is_sensitive_[id] = 1;
  }

  bool IsSensitive(uint32_t id) const {
    return id < is_sensitive_.size() && is_sensitive_[id] != 0;
  }

  const std::vector<uint32_t>& sensitive_ids() const { return sensitive_ids_; }
  size_t vocab_size() const { return is_sensitive_.size(); }
  size_t sensitive_count() const { return sensitive_ids_.size(); }
  double quantile() const { return quantile_; }

 private:
  std::vector<uint32_t> sensitive_ids_;
  std::vector<uint8_t> is_sensitive_;
  double quantile_;
};

// Marks the ceil(q * |V|) lowest-frequency tokens sensitive. Ties at the
// quantile cut are broken by token id ascending, so the partition is
// deterministic for a given (store, q).
inline SensitivityPartition PartitionByFrequency(const EmbeddingStore& store,
                                                 double quantile) {
  if (!(quantile >= 0.0 && quantile <= 1.0)) {
    Fail(ErrorKind::kParameter, "sensitivity quantile must be in [0, 1]");
  }
  const size_t vocab = store.size();
  // The small guard keeps ceil() stable when q * |V| is an exact integer that
  // floating-point rounding nudged upward.
  const double scaled = quantile * static_cast<double>(vocab) - 1e-9;
  size_t cut = scaled <= 0.0 ? 0 : static_cast<size_t>(std::ceil(scaled));
  cut = std::min(cut, vocab);

  std::vector<uint32_t> order(vocab);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    if (store.frequency(a) != store.frequency(b)) {
      return store.frequency(a) < store.frequency(b);
    }
    return a < b;
  });

  std::vector<uint32_t> sensitive(order.begin(),
                                  order.begin() + static_cast<long>(cut));
  std::sort(sensitive.begin(), sensitive.end());
  return SensitivityPartition(std::move(sensitive), vocab, quantile);
}

}  // namespace lexveil

#endif  // LEXVEIL_STORE_HPP_
