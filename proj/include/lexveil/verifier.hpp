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

#ifndef LEXVEIL_VERIFIER_HPP_
#define LEXVEIL_VERIFIER_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lexveil/candidates.hpp"
#include "lexveil/error.hpp"
#include "lexveil/mechanism.hpp"
#include "lexveil/rng.hpp"
#include "lexveil/store.hpp"

namespace lexveil {

// Two-sided 99% normal quantile used for all confidence halfwidths.
inline constexpr double kZ99 = 2.5758293035489004;

inline constexpr uint64_t kMinTrials = 10'000;
inline constexpr uint64_t kDefaultCheckTrials = 1'000'000;
inline constexpr uint64_t kDefaultOracleSamples = 10'000'000;

struct OutcomeStat {
  uint64_t count = 0;
  double probability = 0.0;
  double halfwidth = 0.0;  // 99% normal-approximation halfwidth
};

// Empirical output distribution of the per-token mechanism for one input.
struct MechanismDistribution {
  uint32_t input_id = 0;
  uint64_t trials = 0;
  std::map<uint32_t, OutcomeStat> outcomes;  // keyed by output token id

  // Theoretical support: candidate ids, plus the identity outcome for
  // non-sensitive inputs. Zero-count members still belong here.
  std::set<uint32_t> support;
};

namespace detail {

inline double Halfwidth(uint64_t count, uint64_t trials) {
  const double p = static_cast<double>(count) / static_cast<double>(trials);
  return kZ99 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

inline uint64_t SubSeed(uint64_t seed, uint64_t which) {
  uint64_t x = seed ^ (0xA0761D6478BD642FULL * (which + 1));
  return SplitMix64Next(x);
}

}  // namespace detail

// Runs the per-token mechanism `trials` times, one independent stream per
// trial (stream id = trial index), and tallies the outcomes. Tally totals do
// not depend on the worker count, since trial streams are fixed up front and
// counts merge by summation.
inline MechanismDistribution EstimateDistribution(
    uint32_t input_id, const SensitivityPartition& partition,
    const CandidateTable& table, const PrivacyParams& params, uint64_t trials,
    uint64_t seed = 0, unsigned workers = 0) {
  params.Validate();
  if (trials < kMinTrials) {
    Fail(ErrorKind::kParameter,
         "distribution estimation needs at least " +
             std::to_string(kMinTrials) + " trials");
  }
  if (input_id >= table.size()) {
    Fail(ErrorKind::kParameter, "input token id is out of vocabulary");
  }

  MechanismDistribution dist;
  dist.input_id = input_id;
  dist.trials = trials;
  for (const auto& entry : table.list(input_id)) {
    dist.support.insert(entry.candidate_id);
  }
  if (!partition.IsSensitive(input_id)) dist.support.insert(input_id);

  // Dense tally slots: one per support member, in id order.
  std::vector<uint32_t> slot_ids(dist.support.begin(), dist.support.end());
  std::map<uint32_t, size_t> slot_of;
  for (size_t s = 0; s < slot_ids.size(); ++s) slot_of[slot_ids[s]] = s;

  std::vector<uint64_t> counts(slot_ids.size(), 0);
  std::mutex merge_mutex;
  std::atomic<uint64_t> next_block{0};
  constexpr uint64_t kBlock = 1u << 14;

  const auto run_worker = [&]() {
    std::vector<uint64_t> local(slot_ids.size(), 0);
    while (true) {
      const uint64_t begin = next_block.fetch_add(kBlock);
      if (begin >= trials) break;
      const uint64_t end = std::min(trials, begin + kBlock);
      for (uint64_t t = begin; t < end; ++t) {
        RngStream rng(seed, t);
        const SanitizeDecision decision =
            SanitizeToken(input_id, partition, table, params, rng);
        ++local[slot_of.at(decision.output_id)];
      }
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    for (size_t s = 0; s < counts.size(); ++s) counts[s] += local[s];
  };

  if (workers == 0) workers = std::thread::hardware_concurrency();
  if (workers <= 1) {
    run_worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_worker);
    for (auto& t : pool) t.join();
  }

  for (size_t s = 0; s < slot_ids.size(); ++s) {
    OutcomeStat stat;
    stat.count = counts[s];
    stat.probability =
        static_cast<double>(counts[s]) / static_cast<double>(trials);
    stat.halfwidth = detail::Halfwidth(counts[s], trials);
    dist.outcomes[slot_ids[s]] = stat;
  }
  return dist;
}

struct PairDetail {
  uint32_t outcome = 0;
  double p_x = 0.0;
  double p_xprime = 0.0;
  double halfwidth_x = 0.0;
  double halfwidth_xprime = 0.0;
  double log_ratio = 0.0;  // |ln(p_x / p_xprime)|
  double slack = 0.0;      // first-order propagation of the halfwidths
  bool within_bound = false;
};

struct PrivacyReport {
  std::string case_name;
  double epsilon = 0.0;
  double p = 1.0;
  double bound = 0.0;  // epsilon, or ln(1/p) + epsilon
  uint32_t x = 0;
  uint32_t xprime = 0;
  uint64_t trials = 0;
  bool testable = false;  // false when no shared outcome exists
  bool pass = false;
  double worst_log_ratio = 0.0;
  double worst_slack = 0.0;
  std::vector<PairDetail> pairs;
  // Outcomes possible for only one of the two inputs; the probability ratio
  // is undefined there, so they are reported instead of tested.
  std::vector<uint32_t> support_mismatches;
  // Shared outcomes with a zero empirical count on either side; too little
  // data for a ratio at this trial budget.
  std::vector<uint32_t> insufficient;
};

// Checks every shared outcome's |log probability ratio| against the bound,
// with per-pair statistical slack from the 99% halfwidths.
inline PrivacyReport CompareDistributions(const MechanismDistribution& dist_x,
                                          const MechanismDistribution& dist_xp,
                                          double bound,
                                          const std::string& case_name) {
  PrivacyReport report;
  report.case_name = case_name;
  report.bound = bound;
  report.x = dist_x.input_id;
  report.xprime = dist_xp.input_id;
  report.trials = dist_x.trials;

  std::vector<uint32_t> shared;
  for (uint32_t outcome : dist_x.support) {
    if (dist_xp.support.count(outcome) > 0) {
      shared.push_back(outcome);
    } else {
      report.support_mismatches.push_back(outcome);
    }
  }
  for (uint32_t outcome : dist_xp.support) {
    if (dist_x.support.count(outcome) == 0) {
      report.support_mismatches.push_back(outcome);
    }
  }

  if (shared.empty()) {
    report.testable = false;
    report.pass = false;
    return report;
  }
  report.testable = true;

  bool all_within = true;
  for (uint32_t outcome : shared) {
    const OutcomeStat& sx = dist_x.outcomes.at(outcome);
    const OutcomeStat& sxp = dist_xp.outcomes.at(outcome);
    if (sx.count == 0 || sxp.count == 0) {
      report.insufficient.push_back(outcome);
      continue;
    }
    PairDetail pair;
    pair.outcome = outcome;
    pair.p_x = sx.probability;
    pair.p_xprime = sxp.probability;
    pair.halfwidth_x = sx.halfwidth;
    pair.halfwidth_xprime = sxp.halfwidth;
    pair.log_ratio = std::fabs(std::log(sx.probability / sxp.probability));
    pair.slack = sx.halfwidth / sx.probability +
                 sxp.halfwidth / sxp.probability;
    pair.within_bound = pair.log_ratio <= bound + pair.slack;
    all_within = all_within && pair.within_bound;
    if (pair.log_ratio >= report.worst_log_ratio) {
      report.worst_log_ratio = pair.log_ratio;
      report.worst_slack = pair.slack;
    }
    report.pairs.push_back(pair);
  }

  report.pass = all_within && !report.pairs.empty();
  return report;
}

// Case 1: both tokens sensitive; the mechanism should satisfy the epsilon
// bound on every shared outcome.
inline PrivacyReport CheckCase1(uint32_t x, uint32_t xprime,
                                const SensitivityPartition& partition,
                                const CandidateTable& table,
                                const PrivacyParams& params, uint64_t trials,
                                uint64_t seed = 0, unsigned workers = 0) {
  params.Validate();
  if (!partition.IsSensitive(x) || !partition.IsSensitive(xprime)) {
    Fail(ErrorKind::kParameter, "case 1 requires two sensitive tokens");
  }
  const MechanismDistribution dist_x =
      EstimateDistribution(x, partition, table, params, trials,
                           detail::SubSeed(seed, 1), workers);
  const MechanismDistribution dist_xp =
      EstimateDistribution(xprime, partition, table, params, trials,
                           detail::SubSeed(seed, 2), workers);
  PrivacyReport report =
      CompareDistributions(dist_x, dist_xp, params.epsilon, "case1");
  report.epsilon = params.epsilon;
  report.p = params.p;
  return report;
}

// Case 2: x sensitive, xprime non-sensitive; the bound relaxes to
// ln(1/p) + epsilon.
inline PrivacyReport CheckCase2(uint32_t x, uint32_t xprime,
                                const SensitivityPartition& partition,
                                const CandidateTable& table,
                                const PrivacyParams& params, uint64_t trials,
                                uint64_t seed = 0, unsigned workers = 0) {
  params.Validate();
  if (!partition.IsSensitive(x)) {
    Fail(ErrorKind::kParameter, "case 2 requires a sensitive x");
  }
  if (partition.IsSensitive(xprime)) {
    Fail(ErrorKind::kParameter, "case 2 requires a non-sensitive xprime");
  }
  const MechanismDistribution dist_x =
      EstimateDistribution(x, partition, table, params, trials,
                           detail::SubSeed(seed, 1), workers);
  const MechanismDistribution dist_xp =
      EstimateDistribution(xprime, partition, table, params, trials,
                           detail::SubSeed(seed, 2), workers);
  PrivacyReport report =
      CompareDistributions(dist_x, dist_xp, Case2Budget(params), "case2");
  report.epsilon = params.epsilon;
  report.p = params.p;
  return report;
}

// Independent ground truth for the noisy-argmax selection probabilities.
// Deliberately shares nothing with the mechanism's sampling path: a standard
// mt19937_64 engine instead of the library stream, and Laplace noise formed
// as the difference of two exponentials instead of an inverse CDF. Results
// are indexed by score position.
inline std::vector<double> ExactSmallOracle(std::span<const double> scores,
                                            double epsilon,
                                            uint64_t samples = kDefaultOracleSamples,
                                            uint64_t seed = 0xC0FFEE,
                                            unsigned workers = 0) {
  if (scores.empty() || scores.size() > 8) {
    Fail(ErrorKind::kParameter, "oracle supports 1 to 8 outcomes");
  }
  if (!(std::isfinite(epsilon) && epsilon > 0.0)) {
    Fail(ErrorKind::kParameter, "epsilon must be positive and finite");
  }
  const double scale = kScoreSensitivity / epsilon;
  const size_t n = scores.size();

  constexpr uint64_t kChunk = 1u << 16;
  const uint64_t chunks = (samples + kChunk - 1) / kChunk;

  std::vector<uint64_t> counts(n, 0);
  std::mutex merge_mutex;
  std::atomic<uint64_t> next_chunk{0};

  const auto run_worker = [&]() {
    std::vector<uint64_t> local(n, 0);
    while (true) {
      const uint64_t c = next_chunk.fetch_add(1);
      if (c >= chunks) break;
      std::seed_seq seq{static_cast<uint32_t>(seed),
                        static_cast<uint32_t>(seed >> 32),
                        static_cast<uint32_t>(c),
                        static_cast<uint32_t>(c >> 32)};
      std::mt19937_64 engine(seq);
      std::exponential_distribution<double> expo(1.0);
      const uint64_t begin = c * kChunk;
      const uint64_t end = std::min(samples, begin + kChunk);
      for (uint64_t s = begin; s < end; ++s) {
        size_t best = 0;
        double best_score = 0.0;
        for (size_t i = 0; i < n; ++i) {
          const double noise = scale * (expo(engine) - expo(engine));
          const double noisy = scores[i] + noise;
          if (i == 0 || noisy > best_score) {
            best = i;
            best_score = noisy;
          }
        }
        ++local[best];
      }
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    for (size_t i = 0; i < n; ++i) counts[i] += local[i];
  };

  if (workers == 0) workers = std::thread::hardware_concurrency();
  if (workers <= 1) {
    run_worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> probabilities(n);
  for (size_t i = 0; i < n; ++i) {
    probabilities[i] =
        static_cast<double>(counts[i]) / static_cast<double>(samples);
  }
  return probabilities;
}

inline nlohmann::json ReportToJson(const PrivacyReport& report) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& pair : report.pairs) {
    pairs.push_back({
        {"outcome", pair.outcome},
        {"p_x", pair.p_x},
        {"p_xprime", pair.p_xprime},
        {"halfwidth_x", pair.halfwidth_x},
        {"halfwidth_xprime", pair.halfwidth_xprime},
        {"log_ratio", pair.log_ratio},
        {"slack", pair.slack},
        {"within_bound", pair.within_bound},
    });
  }
  return nlohmann::json{
      {"case", report.case_name},
      {"epsilon", report.epsilon},
      {"p", report.p},
      {"bound", report.bound},
      {"x", report.x},
      {"xprime", report.xprime},
      {"trials", report.trials},
      {"testable", report.testable},
      {"pass", report.pass},
      {"worst_log_ratio", report.worst_log_ratio},
      {"worst_slack", report.worst_slack},
      {"pairs", pairs},
      {"support_mismatches", report.support_mismatches},
      {"insufficient", report.insufficient},
  };
}

}  // namespace lexveil

#endif  // LEXVEIL_VERIFIER_HPP_
