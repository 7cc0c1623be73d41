// Copyright 2026 The dncalign Authors.
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
#include "dnc/reliability.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles/greedy_replay.h"
#include "test_util.h"

namespace dnc {
namespace {

std::vector<std::span<const double>> Spans(
    const std::vector<std::vector<double>>& rows) {
  return {rows.begin(), rows.end()};
}

TEST(Evidence, BeliefAndUncertaintySumToOne) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto row = testing::RandomRow(rng, 2 + t % 40, -1.0, 1.0);
    const DirichletOpinion op = Evidence(row, 0.07);
    EXPECT_NEAR(op.uncertainty + op.belief.sum(), 1.0, 1e-12);
    const int k = op.num_candidates();
    const double bound = (op.strength - k + 1.0) / op.strength;
    EXPECT_LE(op.expected_prob.maxCoeff(), bound + 1e-12);
  }
}

TEST(Evidence, MatchesDefinition) {
  const std::vector<double> s = {0.5, -0.2, 0.0};
  const DirichletOpinion op = Evidence(s, 0.07);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(op.evidence(j), std::exp(std::tanh(s[j] / 0.07)), 1e-12);
    EXPECT_NEAR(op.alpha(j), op.evidence(j) + 1.0, 1e-12);
  }
  EXPECT_NEAR(op.uncertainty, 3.0 / op.strength, 1e-12);
}

TEST(Evidence, RaisingSimilaritiesLowersUncertainty) {
  std::vector<double> s = {0.01, -0.03, 0.02, 0.0};
  const DirichletOpinion before = Evidence(s, 0.07);
  for (double& x : s) x += 0.01;
  const DirichletOpinion after = Evidence(s, 0.07);
  EXPECT_GT(after.strength, before.strength);
  EXPECT_LT(after.uncertainty, before.uncertainty);
}

TEST(Evidence, DerivativeMatchesFiniteDifference) {
  for (double s : {-0.4, -0.05, 0.0, 0.03, 0.2}) {
    const double h = 1e-6;
    const double fd = (std::exp(std::tanh((s + h) / 0.07)) -
                       std::exp(std::tanh((s - h) / 0.07))) / (2 * h);
    EXPECT_NEAR(EvidenceDerivative(s, 0.07), fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Evidence, SameStrengthDifferentArgmax) {
  // Two evidence vectors with equal total mass on different indices.
  Vector a(4), b(4);
  a << 5.0, 1.0, 1.0, 1.0;
  b << 1.0, 1.0, 5.0, 1.0;
  const auto oa = DirichletOpinion::FromEvidence(a);
  const auto ob = DirichletOpinion::FromEvidence(b);
  EXPECT_DOUBLE_EQ(oa.uncertainty, ob.uncertainty);
  EXPECT_NE(ArgMax(AsSpan(oa.belief)), ArgMax(AsSpan(ob.belief)));
}

TEST(Consensus, ClipsNegativeDotProduct) {
  const std::vector<double> s = {0.3, -0.4, 0.1};
  EXPECT_DOUBLE_EQ(Consensus(s, 0), 0.3);
  EXPECT_DOUBLE_EQ(Consensus(s, 1), 0.0);
  const std::vector<double> y = {0.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(Consensus(s, y), 0.0);
}

TEST(Marginal, WorkedExamples) {
  const std::vector<std::vector<double>> rows = {
      {0.9, 0.1}, {0.8, 0.2}, {0.1, 0.9}};
  const auto spans = Spans(rows);
  const std::vector<int> one = {0};
  EXPECT_NEAR(MarginalContribution(spans, one, 2), -0.4, 1e-12);
  const std::vector<int> both = {0, 2};
  EXPECT_NEAR(MarginalContribution(spans, both, 1), 0.1, 1e-12);
  EXPECT_THROW(MarginalContribution(spans, std::vector<int>{}, 1),
               std::invalid_argument);
}

TEST(Marginal, DuplicateOfMeanAddsNothing) {
  const std::vector<std::vector<double>> rows = {{0.6, 0.2}, {0.6, 0.2}};
  EXPECT_NEAR(MarginalContribution(Spans(rows), std::vector<int>{0}, 1), 0.0,
              1e-15);
}

TEST(Greedy, InitialSubsetSize) {
  EXPECT_EQ(InitialSubsetSize(1), 1);
  EXPECT_EQ(InitialSubsetSize(2), 1);
  EXPECT_EQ(InitialSubsetSize(3), 2);
  EXPECT_EQ(InitialSubsetSize(4), 3);
  EXPECT_EQ(InitialSubsetSize(6), 4);
}

TEST(Greedy, ThreeRowExample) {
  const std::vector<std::vector<double>> rows = {
      {0.9, 0.1}, {0.8, 0.2}, {0.1, 0.9}};
  const GreedySelection sel = GreedyEstimate(Spans(rows));
  EXPECT_EQ(sel.initial, (std::vector<int>{0, 2}));
  EXPECT_EQ(sel.selected, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(sel.estimated_index, 0);
}

TEST(Greedy, SingleModality) {
  const std::vector<std::vector<double>> rows = {{0.1, 0.7, 0.3}};
  const GreedySelection sel = GreedyEstimate(Spans(rows));
  EXPECT_EQ(sel.selected, std::vector<int>{0});
  EXPECT_EQ(sel.estimated_index, 1);
}

TEST(Greedy, ZeroRowsAreUnavailable) {
  const std::vector<std::vector<double>> rows = {{0, 0, 0}, {0.2, 0.1, 0.5}};
  const GreedySelection sel = GreedyEstimate(Spans(rows));
  EXPECT_EQ(sel.available, std::vector<int>{1});
  EXPECT_EQ(sel.estimated_index, 2);
  const std::vector<std::vector<double>> none = {{0, 0}, {0, 0}};
  EXPECT_EQ(GreedyEstimate(Spans(none)).estimated_index, -1);
}

TEST(Greedy, EqualRowsArePermutationStable) {
  const std::vector<std::vector<double>> rows(4, {0.2, 0.6, 0.1});
  const GreedySelection sel = GreedyEstimate(Spans(rows));
  EXPECT_EQ(sel.estimated_index, 1);
}

TEST(Greedy, AgreesWithExhaustiveReplay) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 200; ++t) {
    const int m = 1 + t % 6;
    const int n = 2 + (t * 7) % 11;
    std::vector<std::vector<double>> rows;
    for (int j = 0; j < m; ++j) rows.push_back(testing::RandomRow(rng, n, -1, 1));
    if (m > 2 && t % 5 == 0) rows[1].assign(n, 0.0);
    const GreedySelection sel = GreedyEstimate(Spans(rows));
    const oracle::Replay ref = oracle::ReplayGreedy(rows);
    unsigned initial = 0, selected = 0;
    for (int j : sel.initial) initial |= 1u << j;
    for (int j : sel.selected) selected |= 1u << j;
    EXPECT_EQ(initial, ref.initial) << "case " << t;
    EXPECT_EQ(selected, ref.selected) << "case " << t;
    EXPECT_EQ(sel.estimated_index, ref.estimate) << "case " << t;
  }
}

TEST(Division, AgreesWithPredicateReplay) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + t % 30;
    std::vector<PairStats> records(n);
    std::vector<double> u(n), c(n);
    std::vector<int> tp(n);
    for (int i = 0; i < n; ++i) {
      u[i] = unit(rng);
      c[i] = unit(rng);
      tp[i] = unit(rng) < (t % 4 == 0 ? 0.0 : 0.6);
      records[i] = {u[i], c[i], tp[i] != 0};
    }
    const DivisionState got = DividePairs(records, 0.3);
    const oracle::DivisionReplay ref = oracle::ReplayDivision(u, c, tp, 0.3);
    EXPECT_DOUBLE_EQ(got.beta_u, ref.beta_u);
    EXPECT_DOUBLE_EQ(got.beta_c, ref.beta_c);
    ASSERT_EQ(got.tags.size(), ref.tags.size());
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(static_cast<int>(got.tags[i]), static_cast<int>(ref.tags[i]));
    }
    EXPECT_EQ(got.clean.size() + got.low_consensus.size() +
                  got.high_uncertainty.size(),
              static_cast<std::size_t>(n));
  }
}

TEST(Division, ThresholdExamples) {
  std::vector<PairStats> records = {{0.4, 0.1, true}, {0.2, 0.8, false}};
  DivisionState d = DividePairs(records, 0.3);
  EXPECT_DOUBLE_EQ(d.beta_u, 0.4);
  EXPECT_DOUBLE_EQ(d.beta_c, 0.3);
  EXPECT_EQ(Classify(0.2, 0.8, 0.4, 0.3), Subset::kClean);
  EXPECT_EQ(Classify(0.5, 0.8, 0.4, 0.3), Subset::kHighUncertainty);
  EXPECT_EQ(Classify(0.2, 0.1, 0.4, 0.3), Subset::kLowConsensus);
}

TEST(Division, EmptyTruePositivesFallBackToBeta) {
  std::vector<PairStats> records = {{0.9, 0.1, false}};
  const DivisionState d = DividePairs(records, 0.3);
  EXPECT_DOUBLE_EQ(d.beta_u, 0.7);
  EXPECT_DOUBLE_EQ(d.beta_c, 0.3);
  EXPECT_EQ(d.tags[0], Subset::kHighUncertainty);
}

TEST(Division, ModesRestrictSubsets) {
  EXPECT_EQ(Classify(0.2, 0.1, 0.4, 0.3, DivisionMode::kUncertaintyOnly),
            Subset::kClean);
  EXPECT_EQ(Classify(0.9, 0.8, 0.4, 0.3, DivisionMode::kConsensusOnly),
            Subset::kClean);
  EXPECT_EQ(Classify(0.9, 0.1, 0.4, 0.3, DivisionMode::kNone), Subset::kClean);
}

TEST(Weight, BalancedCombination) {
  EXPECT_DOUBLE_EQ(ReliabilityWeight(0.2, 0.6, 0.5), 0.7);
  EXPECT_DOUBLE_EQ(ReliabilityWeight(0.2, 0.6, 1.0), 0.8);
  EXPECT_THROW(ReliabilityWeight(0.2, 0.6, 1.5), std::invalid_argument);
}

}  // namespace
}  // namespace dnc
