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

#ifndef LEXVEIL_SANITIZER_HPP_
#define LEXVEIL_SANITIZER_HPP_

#include <atomic>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lexveil/candidates.hpp"
#include "lexveil/error.hpp"
#include "lexveil/mechanism.hpp"
#include "lexveil/rng.hpp"
#include "lexveil/store.hpp"
#include "lexveil/tokenize.hpp"

namespace lexveil {

// Run configuration with the conventional defaults: epsilon 1, k 30,
// replacement probability 0.3, bottom 20% of frequencies sensitive.
struct SanitizerConfig {
  double epsilon = 1.0;
  uint32_t k = 30;
  double p = 0.3;
  double q = 0.20;
  uint64_t seed = 0;

  PrivacyParams Params() const { return {epsilon, p, kScoreSensitivity}; }

  void Validate() const {
    Params().Validate();
    if (!(q >= 0.0 && q <= 1.0)) {
      Fail(ErrorKind::kParameter, "sensitivity quantile q must be in [0, 1]");
    }
    if (k < 1) Fail(ErrorKind::kParameter, "k must be at least 1");
  }
};

struct AuditRecord {
  uint64_t doc;       // document index (input line)
  uint64_t position;  // token index within the document
  std::string original_surface;
  std::string output_surface;
  SanitizeDecision decision;
};

inline nlohmann::json AuditToJson(const AuditRecord& record) {
  nlohmann::json j{
      {"doc", record.doc},
      {"pos", record.position},
      {"original", record.original_surface},
      {"output", record.output_surface},
      {"branch", std::string(BranchName(record.decision.branch))},
      {"epsilon_spent", record.decision.epsilon_spent},
  };
  if (record.decision.original_id == kOovId) {
    j["original_id"] = nullptr;
    j["output_id"] = nullptr;
  } else {
    j["original_id"] = record.decision.original_id;
    j["output_id"] = record.decision.output_id;
  }
  return j;
}

struct DocumentResult {
  std::string text;
  std::vector<AuditRecord> records;
  uint64_t oov_count = 0;
};

// Verifies that a loaded table belongs to this store and was built with the
// configured k. A k mismatch is refused rather than silently rebuilt, since k
// changes the privacy/utility trade-off.
inline void CheckPipeline(const EmbeddingStore& store,
                          const CandidateTable& table, uint32_t expected_k) {
  if (!table.MatchesStore(store)) {
    Fail(ErrorKind::kChecksum,
         "candidate table checksum does not match the store");
  }
  if (table.k() != expected_k) {
    Fail(ErrorKind::kConfig,
         "candidate table was built with k=" + std::to_string(table.k()) +
             " but the run is configured with k=" + std::to_string(expected_k));
  }
}

// Sanitizes one document. Tokens are processed sequentially so the stream's
// draw schedule is pinned; in-vocabulary tokens go through the mapping
// function and unknown tokens pass through unchanged (tallied in oov_count).
inline DocumentResult SanitizeDocument(std::string_view text,
                                       const EmbeddingStore& store,
                                       const SensitivityPartition& partition,
                                       const CandidateTable& table,
                                       const PrivacyParams& params,
                                       RngStream& rng,
                                       uint64_t doc_index = 0) {
  const std::vector<TokenSpan> spans = Tokenize(text);
  std::vector<std::string> replacements;
  replacements.reserve(spans.size());

  DocumentResult result;
  result.records.reserve(spans.size());
  for (size_t i = 0; i < spans.size(); ++i) {
    const std::string_view surface = spans[i].surface;
    const auto found = store.Find(surface);
    const uint32_t id = found.value_or(kOovId);
    const SanitizeDecision decision =
        SanitizeToken(id, partition, table, params, rng);

    std::string output = decision.Replaced()
                             ? store.surface(decision.output_id)
                             : std::string(surface);
    if (decision.branch == Branch::kOovPassthrough) ++result.oov_count;

    result.records.push_back(AuditRecord{doc_index, i, std::string(surface),
                                         output, decision});
    replacements.push_back(std::move(output));
  }
  result.text = Detokenize(text, spans, replacements);
  return result;
}

// Sanitizes a batch of documents. Each document gets its own stream with
// stream id = document index, so per-document output is independent of how
// documents are scheduled onto workers.
inline std::vector<DocumentResult> SanitizeDocuments(
    std::span<const std::string> documents, const EmbeddingStore& store,
    const SensitivityPartition& partition, const CandidateTable& table,
    const PrivacyParams& params, uint64_t seed, unsigned workers = 0) {
  std::vector<DocumentResult> results(documents.size());
  if (workers == 0) workers = std::thread::hardware_concurrency();
  if (workers < 1) workers = 1;

  std::atomic<size_t> next{0};
  const auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= documents.size()) return;
      RngStream rng(seed, i);
      results[i] = SanitizeDocument(documents[i], store, partition, table,
                                    params, rng, i);
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

inline void WriteAuditLog(std::ostream& out,
                          std::span<const DocumentResult> results) {
  for (const auto& doc : results) {
    for (const auto& record : doc.records) {
      out << AuditToJson(record).dump() << '\n';
    }
  }
  if (!out) Fail(ErrorKind::kIo, "failed to write audit log");
}

}  // namespace lexveil

#endif  // LEXVEIL_SANITIZER_HPP_
