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

#ifndef LEXVEIL_MECHANISM_HPP_
#define LEXVEIL_MECHANISM_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

#include "lexveil/candidates.hpp"
#include "lexveil/error.hpp"
#include "lexveil/rng.hpp"
#include "lexveil/store.hpp"

namespace lexveil {

// Min-max normalization pins the score range to [0, 1], so the selection
// score has sensitivity exactly 1.
inline constexpr double kScoreSensitivity = 1.0;

struct PrivacyParams {
  double epsilon = 1.0;      // per-token privacy budget
  double p = 0.3;            // replacement probability for non-sensitive tokens
  double sensitivity = 1.0;  // fixed; see kScoreSensitivity

  void Validate() const {
    if (!(std::isfinite(epsilon) && epsilon > 0.0)) {
      Fail(ErrorKind::kParameter, "epsilon must be positive and finite");
    }
    // p = 0 would make the relaxed budget ln(1/p) + epsilon diverge, so the
    // probabilistic branch requires p in (0, 1].
    if (!(p > 0.0 && p <= 1.0)) {
      Fail(ErrorKind::kParameter, "replacement probability p must be in (0, 1]");
    }
    if (sensitivity != kScoreSensitivity) {
      Fail(ErrorKind::kParameter, "score sensitivity is fixed to 1.0");
    }
  }

  double NoiseScale() const { return sensitivity / epsilon; }
};

// Privacy level of the mechanism when one of two neighboring tokens takes the
// probabilistic branch: ln(1/p) + epsilon.
inline double Case2Budget(const PrivacyParams& params) {
  params.Validate();
  return std::log(1.0 / params.p) + params.epsilon;
}

inline double SampleLaplace(RngStream& rng, double scale) {
  return rng.NextLaplace(scale);
}

struct ScoredOutcome {
  uint32_t id;
  double score;
};

// Adds independent Laplace(sensitivity / epsilon) noise to every outcome's
// score and returns the id with the largest noisy score. Exact noisy ties are
// broken toward the lower id; they only arise by floating-point coincidence.
// Noise is drawn in list order, one uniform per outcome.
inline uint32_t NoisyArgmax(std::span<const ScoredOutcome> outcomes,
                            const PrivacyParams& params, RngStream& rng) {
  params.Validate();
  if (outcomes.empty()) {
    Fail(ErrorKind::kDomain, "noisy argmax over an empty outcome list");
  }
  const double scale = params.NoiseScale();
  bool have_best = false;
  double best_score = 0.0;
  uint32_t best_id = 0;
  for (const auto& outcome : outcomes) {
    if (!(outcome.score >= 0.0 && outcome.score <= 1.0)) {
      Fail(ErrorKind::kParameter, "outcome score outside [0, 1]");
    }
    const double noisy = outcome.score + rng.NextLaplace(scale);
    if (!have_best || noisy > best_score ||
        (noisy == best_score && outcome.id < best_id)) {
      have_best = true;
      best_score = noisy;
      best_id = outcome.id;
    }
  }
  return best_id;
}

// Same selection over a candidate list, using the normalized scores.
inline uint32_t NoisyArgmax(std::span<const CandidateEntry> candidates,
                            const PrivacyParams& params, RngStream& rng) {
  params.Validate();
  if (candidates.empty()) {
    Fail(ErrorKind::kDomain, "noisy argmax over an empty candidate list");
  }
  const double scale = params.NoiseScale();
  bool have_best = false;
  double best_score = 0.0;
  uint32_t best_id = 0;
  for (const auto& entry : candidates) {
    const double noisy = entry.norm_score + rng.NextLaplace(scale);
    if (!have_best || noisy > best_score ||
        (noisy == best_score && entry.candidate_id < best_id)) {
      have_best = true;
      best_score = noisy;
      best_id = entry.candidate_id;
    }
  }
  return best_id;
}

enum class Branch : uint8_t {
  kSensitiveRnm,      // sensitive token, replaced by noisy argmax
  kNonsensitiveRnm,   // non-sensitive token, gate fired, replaced
  kNonsensitiveKeep,  // non-sensitive token, gate did not fire, kept
  kOovPassthrough,    // token outside the vocabulary, kept
};

inline std::string_view BranchName(Branch branch) {
  switch (branch) {
    case Branch::kSensitiveRnm:
      return "sensitive_rnm";
    case Branch::kNonsensitiveRnm:
      return "nonsensitive_rnm";
    case Branch::kNonsensitiveKeep:
      return "nonsensitive_keep";
    case Branch::kOovPassthrough:
      return "oov_passthrough";
  }
  return "unknown";
}

struct SanitizeDecision {
  uint32_t original_id;
  uint32_t output_id;
  Branch branch;
  double epsilon_spent;

  bool Replaced() const {
    return branch == Branch::kSensitiveRnm ||
           branch == Branch::kNonsensitiveRnm;
  }
};

// One token through the mapping function: sensitive tokens are always
// replaced by a noisy-argmax choice from their candidate list; non-sensitive
// tokens run the same selection with probability p and are otherwise kept.
// The Bernoulli gate draw is consumed before any noise draws, so the draw
// schedule is fixed. Out-of-vocabulary ids pass through unchanged.
inline SanitizeDecision SanitizeToken(uint32_t token_id,
                                      const SensitivityPartition& partition,
                                      const CandidateTable& table,
                                      const PrivacyParams& params,
                                      RngStream& rng) {
  params.Validate();
  if (token_id >= table.size()) {
    return {token_id, token_id, Branch::kOovPassthrough, 0.0};
  }
  if (partition.IsSensitive(token_id)) {
    const uint32_t output = NoisyArgmax(
        std::span<const CandidateEntry>(table.list(token_id)), params, rng);
    return {token_id, output, Branch::kSensitiveRnm, params.epsilon};
  }
  if (rng.NextBernoulli(params.p)) {
    const uint32_t output = NoisyArgmax(
        std::span<const CandidateEntry>(table.list(token_id)), params, rng);
    return {token_id, output, Branch::kNonsensitiveRnm, params.epsilon};
  }
  return {token_id, token_id, Branch::kNonsensitiveKeep, 0.0};
}

}  // namespace lexveil

#endif  // LEXVEIL_MECHANISM_HPP_
