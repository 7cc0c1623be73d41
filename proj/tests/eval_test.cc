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
#include "dnc/eval.h"

#include <random>

#include <gtest/gtest.h>

#include "oracles/rank_oracle.h"

namespace dnc {
namespace {

TEST(Ranking, MrrOfKnownRanks) {
  // Ranks 1, 2 and 4 for truth column 0.
  Matrix s(3, 4);
  s << 0.9, 0.1, 0.2, 0.3,
       0.5, 0.8, 0.1, 0.0,
       0.1, 0.4, 0.3, 0.2;
  const std::vector<RankQuery> q = {{0, 0}, {1, 0}, {2, 0}};
  const RankingReport r = RankingMetrics(s, q);
  EXPECT_EQ(r.ranks, (std::vector<int>{1, 2, 4}));
  EXPECT_NEAR(r.mrr, (1.0 + 0.5 + 0.25) / 3.0, 1e-12);
  EXPECT_NEAR(r.hits1, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.hits5, 1.0, 1e-12);
}

TEST(Ranking, IdentityIsPerfect) {
  const Matrix s = Matrix::Identity(20, 20);
  std::vector<RankQuery> q;
  for (int i = 0; i < 20; ++i) q.push_back({i, i});
  const RankingReport r = RankingMetrics(s, q);
  EXPECT_EQ(r.hits1, 1.0);
  EXPECT_EQ(r.mrr, 1.0);
}

TEST(Ranking, TiesFavorLowerIndex) {
  const std::vector<double> row = {0.5, 0.5, 0.5};
  EXPECT_EQ(RankOf(row, 0), 1);
  EXPECT_EQ(RankOf(row, 2), 3);
}

TEST(Ranking, AgreesWithFullSort) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> coarse(0, 9);
  for (int t = 0; t < 20; ++t) {
    Matrix s(50, 50);
    // Coarse values force many ties.
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = coarse(rng) / 10.0;
    std::vector<RankQuery> q;
    for (int i = 0; i < 50; ++i) q.push_back({i, (i * 7 + t) % 50});
    const RankingReport r = RankingMetrics(s, q);
    for (int i = 0; i < 50; ++i) {
      const std::vector<double> row(s.row(i).data(), s.row(i).data() + 50);
      EXPECT_EQ(r.ranks[i], oracle::SortRank(row, q[i].truth));
    }
    EXPECT_LE(r.hits1, r.hits5);
    EXPECT_LE(r.hits5, r.hits10);
  }
}

TEST(Ranking, RejectsOutOfRange) {
  const Matrix s = Matrix::Identity(3, 3);
  const std::vector<RankQuery> q = {{0, 3}};
  EXPECT_THROW(RankingMetrics(s, q), std::out_of_range);
}

TEST(Auc, AgreesWithPairwiseCount) {
  std::mt19937_64 rng(37);
  std::uniform_int_distribution<int> coarse(0, 20);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> w(40);
    std::vector<std::uint8_t> bad(40);
    std::vector<int> bad_int(40);
    for (int i = 0; i < 40; ++i) {
      w[i] = coarse(rng) / 20.0;
      bad[i] = bad_int[i] = (i % 3 == t % 3);
    }
    const auto auc = MannWhitneyAuc(w, bad);
    ASSERT_TRUE(auc.has_value());
    EXPECT_NEAR(*auc, oracle::PairwiseAuc(w, bad_int), 1e-12);
  }
  const std::vector<double> w = {0.1, 0.2};
  const std::vector<std::uint8_t> none = {0, 0};
  EXPECT_FALSE(MannWhitneyAuc(w, none).has_value());
}

TEST(Noise, SubsetPurityAndFractions) {
  const std::vector<double> w = {0.9, 0.8, 0.2, 0.1};
  const std::vector<Subset> s = {Subset::kClean, Subset::kLowConsensus,
                                 Subset::kHighUncertainty,
                                 Subset::kHighUncertainty};
  const std::vector<std::uint8_t> bad = {0, 1, 1, 0};
  const NoiseDiagnostics d = NoiseAuc(w, s, bad);
  EXPECT_DOUBLE_EQ(*d.auc, 0.5);
  EXPECT_EQ(d.high_uncertainty.size, 2);
  EXPECT_EQ(d.high_uncertainty.corrupted, 1);
  EXPECT_DOUBLE_EQ(*d.high_uncertainty.precision, 0.5);
  EXPECT_DOUBLE_EQ(*d.high_uncertainty.recall, 0.5);
  EXPECT_DOUBLE_EQ(*d.low_consensus.precision, 1.0);
  EXPECT_NEAR(d.fraction_clean + d.fraction_low_consensus +
                  d.fraction_high_uncertainty,
              1.0, 1e-12);
}

TEST(Ranking, AverageOfDirections) {
  RankingReport a, b;
  a.hits1 = 0.5;
  a.mrr = 0.6;
  b.hits1 = 0.7;
  b.mrr = 0.8;
  const RankingReport m = AverageReports(a, b);
  EXPECT_DOUBLE_EQ(m.hits1, 0.6);
  EXPECT_DOUBLE_EQ(m.mrr, 0.7);
}

}  // namespace
}  // namespace dnc
