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

#ifndef LEXVEIL_CANDIDATES_HPP_
#define LEXVEIL_CANDIDATES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "lexveil/detail/io.hpp"
#include "lexveil/error.hpp"
#include "lexveil/store.hpp"

namespace lexveil {

inline constexpr uint16_t kTableFormatVersion = 1;

inline double Cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    Fail(ErrorKind::kStructure, "cosine: vector dimensions differ");
  }
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    norm_a += a[i] * a[i];
    norm_b += b[i] * b[i];
  }
  if (norm_a == 0.0 || norm_b == 0.0) {
    Fail(ErrorKind::kDomain, "cosine: zero vector");
  }
  return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

struct CandidateEntry {
  uint32_t candidate_id;
  double raw_cos;     // cosine similarity to the owning token
  double norm_score;  // min-max normalized over the owning list, in [0, 1]
};

// Per-token list of the top-k most cosine-similar substitutes, excluding the
// token itself, sorted by raw cosine descending. Scores are min-max
// normalized within each list so the best entry scores 1 and the worst 0;
// when every cosine in a list is identical all entries score 1, which makes
// the noisy selection uniform. Immutable once built.
class CandidateTable {
 public:
  CandidateTable(uint32_t k, std::vector<std::vector<CandidateEntry>> lists,
                 const detail::Sha256::Digest& store_checksum)
      : k_(k), lists_(std::move(lists)), store_checksum_(store_checksum) {}

  uint32_t k() const { return k_; }
  size_t size() const { return lists_.size(); }
  const std::vector<CandidateEntry>& list(uint32_t token_id) const {
    return lists_[token_id];
  }
  const detail::Sha256::Digest& store_checksum() const {
    return store_checksum_;
  }

  bool MatchesStore(const EmbeddingStore& store) const {
    return store_checksum_ == store.checksum();
  }

  // Exact all-pairs construction. Token ranges are split across workers; each
  // worker fills disjoint list slots, so the result does not depend on the
  // worker count.
  static CandidateTable Build(const EmbeddingStore& store, uint32_t k,
                              unsigned workers = 0) {
    if (k < 1) Fail(ErrorKind::kParameter, "k must be at least 1");
    const size_t vocab = store.size();
    if (vocab < 2) {
      Fail(ErrorKind::kDomain,
           "candidate search needs at least 2 tokens in the vocabulary");
    }
    const size_t list_size = std::min<size_t>(k, vocab - 1);

    std::vector<std::vector<CandidateEntry>> lists(vocab);
    const auto build_range = [&](size_t begin, size_t end) {
      std::vector<CandidateEntry> scratch;
      scratch.reserve(vocab - 1);
      for (size_t i = begin; i < end; ++i) {
        BuildList(store, static_cast<uint32_t>(i), list_size, scratch);
        lists[i] = scratch;
      }
    };

    if (workers == 0) workers = std::thread::hardware_concurrency();
    if (workers <= 1 || vocab < 2 * workers) {
      build_range(0, vocab);
    } else {
      std::vector<std::thread> pool;
      const size_t chunk = (vocab + workers - 1) / workers;
      for (unsigned w = 0; w < workers; ++w) {
        const size_t begin = std::min<size_t>(w * chunk, vocab);
        const size_t end = std::min<size_t>(begin + chunk, vocab);
        if (begin < end) pool.emplace_back(build_range, begin, end);
      }
      for (auto& t : pool) t.join();
    }

    return CandidateTable(k, std::move(lists), store.checksum());
  }

  void Save(std::ostream& out) const {
    detail::WriteBytes(out, "SSCT", 4);
    detail::WriteU16(out, kTableFormatVersion);
    detail::WriteBytes(out, store_checksum_.data(), store_checksum_.size());
    detail::WriteU32(out, k_);
    detail::WriteU32(out, static_cast<uint32_t>(lists_.size()));
    for (const auto& list : lists_) {
      detail::WriteU32(out, static_cast<uint32_t>(list.size()));
      for (const auto& entry : list) {
        detail::WriteU32(out, entry.candidate_id);
        detail::WriteF64(out, entry.raw_cos);
        detail::WriteF64(out, entry.norm_score);
      }
    }
  }

  // When `bind` is given, refuses a table whose recorded store digest does
  // not match.
  static CandidateTable Load(std::istream& in,
                             const EmbeddingStore* bind = nullptr) {
    detail::ExpectMagic(in, "SSCT", "candidate table");
    const uint16_t version = detail::ReadU16(in, "table version");
    if (version != kTableFormatVersion) {
      Fail(ErrorKind::kFormat,
           "unsupported candidate table version " + std::to_string(version));
    }
    detail::Sha256::Digest checksum;
    detail::ReadBytes(in, checksum.data(), checksum.size(), "store checksum");
    const uint32_t k = detail::ReadU32(in, "table k");
    const uint32_t count = detail::ReadU32(in, "table size");

    std::vector<std::vector<CandidateEntry>> lists(count);
    for (uint32_t i = 0; i < count; ++i) {
      const uint32_t entries = detail::ReadU32(in, "candidate count");
      if (entries > count) {
        Fail(ErrorKind::kFormat, "candidate list longer than vocabulary");
      }
      lists[i].reserve(entries);
      std::unordered_set<uint32_t> seen;
      for (uint32_t e = 0; e < entries; ++e) {
        CandidateEntry entry;
        entry.candidate_id = detail::ReadU32(in, "candidate id");
        entry.raw_cos = detail::ReadF64(in, "raw cosine");
        entry.norm_score = detail::ReadF64(in, "normalized score");
        if (entry.candidate_id >= count || entry.candidate_id == i) {
          Fail(ErrorKind::kFormat, "candidate id out of range in list " +
                                       std::to_string(i));
        }
        if (!seen.insert(entry.candidate_id).second) {
          Fail(ErrorKind::kFormat,
               "duplicate candidate id in list " + std::to_string(i));
        }
        lists[i].push_back(entry);
      }
    }

    CandidateTable table(k, std::move(lists), checksum);
    if (bind != nullptr && !table.MatchesStore(*bind)) {
      Fail(ErrorKind::kChecksum,
           "candidate table was built from a different store");
    }
    return table;
  }

 private:
  static void BuildList(const EmbeddingStore& store, uint32_t owner,
                        size_t list_size, std::vector<CandidateEntry>& out) {
    const size_t vocab = store.size();
    const std::span<const double> owner_row = store.unit_vector(owner);
    const size_t dim = owner_row.size();

    out.clear();
    for (uint32_t j = 0; j < vocab; ++j) {
      if (j == owner) continue;
      const std::span<const double> row = store.unit_vector(j);
      double dot = 0.0;
      for (size_t d = 0; d < dim; ++d) dot += owner_row[d] * row[d];
      out.push_back({j, dot, 0.0});
    }

    const auto better = [](const CandidateEntry& a, const CandidateEntry& b) {
      if (a.raw_cos != b.raw_cos) return a.raw_cos > b.raw_cos;
      return a.candidate_id < b.candidate_id;  // cosine ties: lower id first
    };
    std::partial_sort(out.begin(), out.begin() + static_cast<long>(list_size),
                      out.end(), better);
    out.resize(list_size);

    const double cos_max = out.front().raw_cos;
    const double cos_min = out.back().raw_cos;
    if (cos_max == cos_min) {
      for (auto& entry : out) entry.norm_score = 1.0;
    } else {
      const double range = cos_max - cos_min;
      for (auto& entry : out) {
        entry.norm_score = (entry.raw_cos - cos_min) / range;
      }
    }
  }

  uint32_t k_;
  std::vector<std::vector<CandidateEntry>> lists_;
  detail::Sha256::Digest store_checksum_;
};

}  // namespace lexveil

#endif  // LEXVEIL_CANDIDATES_HPP_
