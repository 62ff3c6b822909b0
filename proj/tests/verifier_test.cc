// Copyright 2026 The Lexveil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lexveil/verifier.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "lexveil/candidates.hpp"
#include "lexveil/error.hpp"
#include "lexveil/mechanism.hpp"
#include "lexveil/store.hpp"
#include "testutil.hpp"

namespace lexveil {
namespace {

// Closed form for a two-outcome noisy argmax with scores {1, 0} and
// Laplace(1/epsilon) noise: the low-score outcome wins with probability
// (1/4) * (2 + epsilon) * exp(-epsilon).
double LowScoreWinProbability(double epsilon) {
  return 0.25 * (2.0 + epsilon) * std::exp(-epsilon);
}

// A hand-assembled table over a five-token vocabulary. Token 0 offers the
// descending profile (1, 0.625, 0) over candidates {2, 3, 4}; token 1 offers
// the same candidates with scores permuted. Raw cosines are placeholders;
// only the normalized scores feed the mechanism.
CandidateTable MakeProfileTable() {
  std::vector<std::vector<CandidateEntry>> lists(5);
  lists[0] = {{2, 0.90, 1.0}, {3, 0.50, 0.625}, {4, 0.10, 0.0}};
  lists[1] = {{2, 0.40, 0.625}, {3, 0.80, 1.0}, {4, 0.05, 0.0}};
  lists[2] = {{0, 0.90, 1.0}, {1, 0.40, 0.0}};
  lists[3] = {{0, 0.50, 1.0}, {1, 0.80, 0.0}};
  lists[4] = {{0, 0.10, 1.0}, {1, 0.05, 0.0}};
  return CandidateTable(3, std::move(lists), detail::Sha256::Digest{});
}

// Two outcomes with scores {1, 0} hanging off token 0, so the empirical
// distribution can be pinned against the closed form above.
CandidateTable MakeTwoOutcomeTable() {
  std::vector<std::vector<CandidateEntry>> lists(3);
  lists[0] = {{1, 0.90, 1.0}, {2, 0.10, 0.0}};
  lists[1] = {{0, 0.90, 1.0}, {2, 0.10, 0.0}};
  lists[2] = {{0, 0.90, 1.0}, {1, 0.10, 0.0}};
  return CandidateTable(2, std::move(lists), detail::Sha256::Digest{});
}

SensitivityPartition SensitiveSet(std::vector<uint32_t> ids, size_t vocab) {
  return SensitivityPartition(std::move(ids), vocab, 0.2);
}

PrivacyParams DefaultParams(double epsilon = 1.0, double p = 0.3) {
  PrivacyParams params;
  params.epsilon = epsilon;
  params.p = p;
  return params;
}

TEST(HalfwidthTest, MatchesNormalApproximationFormula) {
  const double expected = kZ99 * std::sqrt(0.25 * 0.75 / 1000.0);
  EXPECT_DOUBLE_EQ(detail::Halfwidth(250, 1000), expected);
  EXPECT_DOUBLE_EQ(detail::Halfwidth(0, 1000), 0.0);
  EXPECT_DOUBLE_EQ(detail::Halfwidth(1000, 1000), 0.0);
}

TEST(EstimateDistributionTest, RejectsTooFewTrials) {
  const CandidateTable table = MakeTwoOutcomeTable();
  const SensitivityPartition partition = SensitiveSet({0}, 3);
  try {
    EstimateDistribution(0, partition, table, DefaultParams(), 9'999);
    FAIL() << "expected kParameter";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParameter);
  }
}

TEST(EstimateDistributionTest, RejectsOutOfVocabularyInput) {
  const CandidateTable table = MakeTwoOutcomeTable();
  const SensitivityPartition partition = SensitiveSet({0}, 3);
  try {
    EstimateDistribution(7, partition, table, DefaultParams(), kMinTrials);
    FAIL() << "expected kParameter";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParameter);
  }
}

TEST(EstimateDistributionTest, SupportIncludesIdentityOnlyWhenNonSensitive) {
  const CandidateTable table = MakeTwoOutcomeTable();
  const PrivacyParams params = DefaultParams();

  const MechanismDistribution sensitive = EstimateDistribution(
      0, SensitiveSet({0}, 3), table, params, kMinTrials, 7);
  EXPECT_EQ(sensitive.support, (std::set<uint32_t>{1, 2}));

  const MechanismDistribution kept = EstimateDistribution(
      0, SensitiveSet({1}, 3), table, params, kMinTrials, 7);
  EXPECT_EQ(kept.support, (std::set<uint32_t>{0, 1, 2}));
}

TEST(EstimateDistributionTest, CountsAndProbabilitiesAreConsistent) {
  const CandidateTable table = MakeProfileTable();
  const SensitivityPartition partition = SensitiveSet({0, 1}, 5);
  const uint64_t trials = 50'000;

  const MechanismDistribution dist = EstimateDistribution(
      0, partition, table, DefaultParams(), trials, 11);

  uint64_t total = 0;
  double mass = 0.0;
  for (const auto& [outcome, stat] : dist.outcomes) {
    EXPECT_TRUE(dist.support.count(outcome) > 0)
        << "outcome " << outcome << " outside declared support";
    total += stat.count;
    mass += stat.probability;
    EXPECT_DOUBLE_EQ(stat.probability,
                     static_cast<double>(stat.count) /
                         static_cast<double>(trials));
    EXPECT_DOUBLE_EQ(stat.halfwidth, detail::Halfwidth(stat.count, trials));
  }
  EXPECT_EQ(total, trials);
  EXPECT_NEAR(mass, 1.0, 1e-12);
  // Every support member gets an entry, even if it never fired.
  EXPECT_EQ(dist.outcomes.size(), dist.support.size());
}

TEST(EstimateDistributionTest, WorkerCountDoesNotChangeCounts) {
  const CandidateTable table = MakeProfileTable();
  const SensitivityPartition partition = SensitiveSet({0, 1}, 5);
  const PrivacyParams params = DefaultParams();

  const MechanismDistribution lone = EstimateDistribution(
      0, partition, table, params, 40'000, 3, /*workers=*/1);
  const MechanismDistribution pooled = EstimateDistribution(
      0, partition, table, params, 40'000, 3, /*workers=*/4);

  ASSERT_EQ(lone.outcomes.size(), pooled.outcomes.size());
  for (const auto& [outcome, stat] : lone.outcomes) {
    EXPECT_EQ(stat.count, pooled.outcomes.at(outcome).count)
        << "outcome " << outcome;
  }
}

TEST(EstimateDistributionTest, SensitiveTwoOutcomeMatchesClosedForm) {
  const CandidateTable table = MakeTwoOutcomeTable();
  const SensitivityPartition partition = SensitiveSet({0}, 3);
  const uint64_t trials = 200'000;

  const MechanismDistribution dist = EstimateDistribution(
      0, partition, table, DefaultParams(1.0), trials, 5);

  const double low = LowScoreWinProbability(1.0);
  EXPECT_NEAR(dist.outcomes.at(2).probability, low, 0.006);
  EXPECT_NEAR(dist.outcomes.at(1).probability, 1.0 - low, 0.006);
}

TEST(EstimateDistributionTest, NonSensitiveGateScalesSelection) {
  const CandidateTable table = MakeTwoOutcomeTable();
  const SensitivityPartition partition = SensitiveSet({1}, 3);
  const uint64_t trials = 200'000;
  const PrivacyParams params = DefaultParams(1.0, 0.3);

  const MechanismDistribution dist = EstimateDistribution(
      0, partition, table, params, trials, 6);

  // With probability 1 - p the token survives untouched; the remaining mass
  // follows the noisy-argmax split over the two candidates.
  const double low = LowScoreWinProbability(1.0);
  EXPECT_NEAR(dist.outcomes.at(0).probability, 0.7, 0.006);
  EXPECT_NEAR(dist.outcomes.at(1).probability, 0.3 * (1.0 - low), 0.006);
  EXPECT_NEAR(dist.outcomes.at(2).probability, 0.3 * low, 0.006);
}

TEST(ExactSmallOracleTest, MatchesClosedFormAtUnitEpsilon) {
  const std::vector<double> scores = {1.0, 0.0};
  const std::vector<double> probs =
      ExactSmallOracle(scores, 1.0, 2'000'000);
  ASSERT_EQ(probs.size(), 2u);
  EXPECT_NEAR(probs[1], LowScoreWinProbability(1.0), 0.002);
  EXPECT_NEAR(probs[0] + probs[1], 1.0, 1e-12);
}

TEST(ExactSmallOracleTest, RejectsBadArguments) {
  const std::vector<double> none;
  const std::vector<double> nine(9, 0.5);
  const std::vector<double> two = {1.0, 0.0};
  EXPECT_THROW(ExactSmallOracle(none, 1.0, 100'000), Error);
  EXPECT_THROW(ExactSmallOracle(nine, 1.0, 100'000), Error);
  EXPECT_THROW(ExactSmallOracle(two, 0.0, 100'000), Error);
  EXPECT_THROW(ExactSmallOracle(two, -1.0, 100'000), Error);
}

TEST(ExactSmallOracleTest, SingleOutcomeAlwaysWins) {
  const std::vector<double> one = {0.25};
  const std::vector<double> probs = ExactSmallOracle(one, 1.0, 100'000);
  ASSERT_EQ(probs.size(), 1u);
  EXPECT_DOUBLE_EQ(probs[0], 1.0);
}

TEST(ExactSmallOracleTest, WorkerCountDoesNotChangeResults) {
  const std::vector<double> scores = {1.0, 0.625, 0.0};
  const std::vector<double> lone =
      ExactSmallOracle(scores, 1.0, 500'000, 99, /*workers=*/1);
  const std::vector<double> pooled =
      ExactSmallOracle(scores, 1.0, 500'000, 99, /*workers=*/3);
  ASSERT_EQ(lone.size(), pooled.size());
  for (size_t i = 0; i < lone.size(); ++i) {
    EXPECT_DOUBLE_EQ(lone[i], pooled[i]) << "outcome " << i;
  }
}

TEST(ExactSmallOracleTest, AgreesWithMechanismOnThreeOutcomes) {
  // The estimator samples the production mechanism; the oracle replays the
  // same selection rule with a foreign engine and a foreign Laplace
  // transform. Agreement within the combined 99% halfwidths ties the two
  // implementations together.
  const CandidateTable table = MakeProfileTable();
  const SensitivityPartition partition = SensitiveSet({0, 1}, 5);
  const uint64_t trials = 200'000;

  const MechanismDistribution dist = EstimateDistribution(
      0, partition, table, DefaultParams(1.0), trials, 21);

  const std::vector<double> scores = {1.0, 0.625, 0.0};
  const uint64_t samples = 2'000'000;
  const std::vector<double> oracle = ExactSmallOracle(scores, 1.0, samples);

  const std::vector<uint32_t> outcome_ids = {2, 3, 4};
  for (size_t i = 0; i < outcome_ids.size(); ++i) {
    const OutcomeStat& stat = dist.outcomes.at(outcome_ids[i]);
    const double oracle_count = oracle[i] * static_cast<double>(samples);
    const double tol =
        stat.halfwidth +
        detail::Halfwidth(static_cast<uint64_t>(oracle_count), samples);
    EXPECT_NEAR(stat.probability, oracle[i], tol)
        << "outcome index " << i;
  }
}

MechanismDistribution HandDistribution(uint32_t input_id, uint64_t trials,
                                       std::map<uint32_t, uint64_t> counts) {
  MechanismDistribution dist;
  dist.input_id = input_id;
  dist.trials = trials;
  for (const auto& [outcome, count] : counts) {
    OutcomeStat stat;
    stat.count = count;
    stat.probability =
        static_cast<double>(count) / static_cast<double>(trials);
    stat.halfwidth = detail::Halfwidth(count, trials);
    dist.outcomes[outcome] = stat;
    dist.support.insert(outcome);
  }
  return dist;
}

TEST(CompareDistributionsTest, RecordsSupportMismatches) {
  const MechanismDistribution x =
      HandDistribution(0, 10'000, {{1, 6'000}, {2, 3'000}, {3, 1'000}});
  const MechanismDistribution xp =
      HandDistribution(5, 10'000, {{2, 4'000}, {3, 4'000}, {4, 2'000}});

  const PrivacyReport report = CompareDistributions(x, xp, 10.0, "case1");
  EXPECT_TRUE(report.testable);
  EXPECT_EQ(report.pairs.size(), 2u);
  EXPECT_EQ(report.support_mismatches,
            (std::vector<uint32_t>{1, 4}));
}

TEST(CompareDistributionsTest, DisjointSupportIsNotTestable) {
  const MechanismDistribution x = HandDistribution(0, 10'000, {{1, 10'000}});
  const MechanismDistribution xp = HandDistribution(5, 10'000, {{2, 10'000}});

  const PrivacyReport report = CompareDistributions(x, xp, 10.0, "case1");
  EXPECT_FALSE(report.testable);
  EXPECT_FALSE(report.pass);
  EXPECT_TRUE(report.pairs.empty());
}

TEST(CompareDistributionsTest, ZeroCountOutcomesAreInsufficientNotFailed) {
  const MechanismDistribution x =
      HandDistribution(0, 10'000, {{1, 9'000}, {2, 1'000}, {3, 0}});
  const MechanismDistribution xp =
      HandDistribution(5, 10'000, {{1, 8'000}, {2, 1'500}, {3, 500}});

  const PrivacyReport report = CompareDistributions(x, xp, 1.0, "case1");
  EXPECT_TRUE(report.testable);
  EXPECT_EQ(report.insufficient, (std::vector<uint32_t>{3}));
  EXPECT_EQ(report.pairs.size(), 2u);
  EXPECT_TRUE(report.pass);
}

TEST(CompareDistributionsTest, RatioBeyondBoundPlusSlackFails) {
  // Outcome 2 has an empirical ratio of e^2; a bound of 1 cannot absorb it
  // even with slack, while a bound of 3 can.
  const uint64_t trials = 1'000'000;
  const auto scaled = [&](double p) {
    return static_cast<uint64_t>(p * static_cast<double>(trials));
  };
  const MechanismDistribution x = HandDistribution(
      0, trials, {{1, trials - scaled(0.2 * std::exp(-2.0))},
                  {2, scaled(0.2 * std::exp(-2.0))}});
  const MechanismDistribution xp =
      HandDistribution(5, trials, {{1, trials - scaled(0.2)},
                                   {2, scaled(0.2)}});

  const PrivacyReport tight = CompareDistributions(x, xp, 1.0, "case1");
  EXPECT_FALSE(tight.pass);
  EXPECT_NEAR(tight.worst_log_ratio, 2.0, 0.01);

  const PrivacyReport loose = CompareDistributions(x, xp, 3.0, "case1");
  EXPECT_TRUE(loose.pass);
}

TEST(CheckCaseTest, Case1RequiresTwoSensitiveTokens) {
  const CandidateTable table = MakeProfileTable();
  const SensitivityPartition partition = SensitiveSet({0}, 5);
  try {
    CheckCase1(0, 1, partition, table, DefaultParams(), kMinTrials);
    FAIL() << "expected kParameter";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParameter);
  }
}

TEST(CheckCaseTest, Case2RequiresMixedSensitivity) {
  const CandidateTable table = MakeProfileTable();
  const SensitivityPartition both = SensitiveSet({0, 1}, 5);
  const SensitivityPartition neither = SensitiveSet({2}, 5);
  EXPECT_THROW(CheckCase2(0, 1, both, table, DefaultParams(), kMinTrials),
               Error);
  EXPECT_THROW(CheckCase2(0, 1, neither, table, DefaultParams(), kMinTrials),
               Error);
}

TEST(CheckCaseTest, Case1PassesOnOverlappingProfiles) {
  const CandidateTable table = MakeProfileTable();
  const SensitivityPartition partition = SensitiveSet({0, 1}, 5);
  const PrivacyParams params = DefaultParams(1.0);

  const PrivacyReport report =
      CheckCase1(0, 1, partition, table, params, 100'000, 17);
  EXPECT_EQ(report.case_name, "case1");
  EXPECT_DOUBLE_EQ(report.bound, 1.0);
  EXPECT_TRUE(report.testable);
  EXPECT_TRUE(report.pass) << "worst log ratio " << report.worst_log_ratio
                           << " slack " << report.worst_slack;
  EXPECT_EQ(report.pairs.size(), 3u);
  EXPECT_TRUE(report.support_mismatches.empty());
}

TEST(CheckCaseTest, Case2UsesRelaxedBoundAndFlagsIdentity) {
  const CandidateTable table = MakeProfileTable();
  const SensitivityPartition partition = SensitiveSet({0}, 5);
  const PrivacyParams params = DefaultParams(1.0, 0.3);

  const PrivacyReport report =
      CheckCase2(0, 1, partition, table, params, 100'000, 17);
  EXPECT_EQ(report.case_name, "case2");
  EXPECT_NEAR(report.bound, Case2Budget(params), 1e-15);
  EXPECT_TRUE(report.testable);
  EXPECT_TRUE(report.pass) << "worst log ratio " << report.worst_log_ratio
                           << " slack " << report.worst_slack;
  // The non-sensitive side can emit itself; the sensitive side cannot, so
  // the identity outcome is a reported mismatch rather than a tested pair.
  EXPECT_EQ(report.support_mismatches, (std::vector<uint32_t>{1}));
}

// Worst-case geometry for the per-token budget: two sensitive tokens that
// rank the same three candidates in opposite order, (1, 0.5, 0) against
// (0, 0.5, 1). Swapping the input moves a shared candidate's score by the
// full sensitivity in each direction, so a pairwise score gap can change by
// twice the sensitivity and the selection ratio degrades toward
// exp(2 * epsilon) rather than exp(epsilon). Quadrature on the exact
// selection integral puts the worst |log ratio| at 1.0904 for epsilon = 1.
// Pin both sides of that fact: the epsilon bound alone is exceeded, while
// twice the budget holds. Inputs whose shared candidates keep the same
// ranking (the overlapping-profile test above) stay within epsilon itself.
TEST(CheckCaseTest, ReversedProfilesExceedEpsilonButStayUnderTwice) {
  std::vector<std::vector<CandidateEntry>> lists(5);
  lists[0] = {{2, 0.90, 1.0}, {3, 0.50, 0.5}, {4, 0.10, 0.0}};
  lists[1] = {{4, 0.90, 1.0}, {3, 0.50, 0.5}, {2, 0.10, 0.0}};
  lists[2] = {{0, 0.90, 1.0}, {1, 0.40, 0.0}};
  lists[3] = {{0, 0.50, 1.0}, {1, 0.80, 0.0}};
  lists[4] = {{0, 0.10, 1.0}, {1, 0.05, 0.0}};
  const CandidateTable table(3, std::move(lists), detail::Sha256::Digest{});
  const SensitivityPartition partition = SensitiveSet({0, 1}, 5);
  const PrivacyParams params = DefaultParams(1.0);

  const MechanismDistribution dist_x =
      EstimateDistribution(0, partition, table, params, 400'000, 23);
  const MechanismDistribution dist_xp =
      EstimateDistribution(1, partition, table, params, 400'000, 24);

  const PrivacyReport tight = CompareDistributions(dist_x, dist_xp, 1.0,
                                                   "case1");
  ASSERT_TRUE(tight.testable);
  EXPECT_TRUE(tight.support_mismatches.empty());
  EXPECT_NEAR(tight.worst_log_ratio, 1.0904, 0.04);
  EXPECT_FALSE(tight.pass);

  const PrivacyReport relaxed = CompareDistributions(dist_x, dist_xp, 2.0,
                                                     "case1");
  EXPECT_TRUE(relaxed.pass) << "worst log ratio " << relaxed.worst_log_ratio;
}

TEST(ReportToJsonTest, SerializesVerdictAndPairs) {
  const MechanismDistribution x =
      HandDistribution(0, 10'000, {{1, 7'000}, {2, 3'000}});
  const MechanismDistribution xp =
      HandDistribution(5, 10'000, {{1, 6'000}, {2, 4'000}});
  PrivacyReport report = CompareDistributions(x, xp, 1.0, "case1");
  report.epsilon = 1.0;
  report.p = 0.3;

  const nlohmann::json j = ReportToJson(report);
  EXPECT_EQ(j.at("case"), "case1");
  EXPECT_EQ(j.at("x"), 0u);
  EXPECT_EQ(j.at("xprime"), 5u);
  EXPECT_EQ(j.at("trials"), 10'000u);
  EXPECT_TRUE(j.at("testable").get<bool>());
  EXPECT_TRUE(j.at("pass").get<bool>());
  ASSERT_EQ(j.at("pairs").size(), 2u);
  for (const auto& pair : j.at("pairs")) {
    EXPECT_TRUE(pair.contains("outcome"));
    EXPECT_TRUE(pair.contains("log_ratio"));
    EXPECT_TRUE(pair.contains("slack"));
    EXPECT_TRUE(pair.contains("within_bound"));
  }
  EXPECT_TRUE(j.at("support_mismatches").empty());
  EXPECT_TRUE(j.at("insufficient").empty());
}

}  // namespace
}  // namespace lexveil
