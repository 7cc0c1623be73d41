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
#ifndef DNC_EVAL_H_
#define DNC_EVAL_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dnc/reliability.h"
#include "dnc/types.h"

namespace dnc {

struct RankingReport {
  double hits1 = 0.0;
  double hits5 = 0.0;
  double hits10 = 0.0;
  double mrr = 0.0;
  std::vector<int> ranks;  // 1-based, one per query
  std::string direction = "left_to_right";
};

// Rank of `truth` in `scores`: 1 + #{j : s_j > s_truth} + #{j < truth :
// s_j == s_truth}.  Ties go to the lower candidate index.
int RankOf(std::span<const double> scores, int truth);

struct RankQuery {
  int row = 0;    // query row in the score matrix
  int truth = 0;  // true candidate column
};

// Throws std::out_of_range when a query lies outside the matrix.
RankingReport RankingMetrics(const Matrix& scores,
                             std::span<const RankQuery> queries);

// Mean of two directions (ranks of the first are kept).
RankingReport AverageReports(const RankingReport& a, const RankingReport& b);

// Mann-Whitney AUC of scores: P(score_clean > score_corrupted) with ties
// counting one half.  Absent when either group is empty.
std::optional<double> MannWhitneyAuc(std::span<const double> scores,
                                     std::span<const std::uint8_t> corrupted);

struct SubsetConfusion {
  int size = 0;
  int corrupted = 0;  // members whose mask is set
  std::optional<double> precision;
  std::optional<double> recall;
};

struct NoiseDiagnostics {
  std::optional<double> auc;
  SubsetConfusion high_uncertainty;
  SubsetConfusion low_consensus;
  double fraction_clean = 0.0;
  double fraction_low_consensus = 0.0;
  double fraction_high_uncertainty = 0.0;
  int num_anchors = 0;
  int num_corrupted = 0;
};

// `weights`, `subsets` and `corrupted` are aligned per train anchor.
NoiseDiagnostics NoiseAuc(std::span<const double> weights,
                          std::span<const Subset> subsets,
                          std::span<const std::uint8_t> corrupted);

nlohmann::json ToJson(const RankingReport& report, bool with_ranks = false);
nlohmann::json ToJson(const NoiseDiagnostics& diagnostics);

}  // namespace dnc

#endif  // DNC_EVAL_H_
