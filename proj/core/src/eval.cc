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

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dnc {

int RankOf(std::span<const double> scores, int truth) {
  if (truth < 0 || truth >= static_cast<int>(scores.size())) {
    throw std::out_of_range("true candidate outside the score row");
  }
  const double target = scores[truth];
  int rank = 1;
  for (int j = 0; j < static_cast<int>(scores.size()); ++j) {
    if (scores[j] > target || (j < truth && scores[j] == target)) ++rank;
  }
  return rank;
}

RankingReport RankingMetrics(const Matrix& scores,
                             std::span<const RankQuery> queries) {
  RankingReport report;
  if (queries.empty()) return report;
  report.ranks.reserve(queries.size());
  for (const RankQuery& q : queries) {
    if (q.row < 0 || q.row >= scores.rows()) {
      throw std::out_of_range("query row outside the score matrix");
    }
    report.ranks.push_back(RankOf(RowSpan(scores, q.row), q.truth));
  }
  const double n = static_cast<double>(queries.size());
  for (int r : report.ranks) {
    report.hits1 += r <= 1;
    report.hits5 += r <= 5;
    report.hits10 += r <= 10;
    report.mrr += 1.0 / r;
  }
  report.hits1 /= n;
  report.hits5 /= n;
  report.hits10 /= n;
  report.mrr /= n;
  return report;
}

RankingReport AverageReports(const RankingReport& a, const RankingReport& b) {
  RankingReport out = a;
  out.hits1 = 0.5 * (a.hits1 + b.hits1);
  out.hits5 = 0.5 * (a.hits5 + b.hits5);
  out.hits10 = 0.5 * (a.hits10 + b.hits10);
  out.mrr = 0.5 * (a.mrr + b.mrr);
  out.direction = "bidirectional";
  return out;
}

std::optional<double> MannWhitneyAuc(std::span<const double> scores,
                                     std::span<const std::uint8_t> corrupted) {
  if (scores.size() != corrupted.size()) {
    throw std::invalid_argument("scores and masks differ in length");
  }
  // Average ranks over the pooled sample, then the U statistic of the clean
  // group.
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double average = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = average;
    i = j + 1;
  }
  double clean = 0, bad = 0, rank_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (corrupted[i]) {
      ++bad;
    } else {
      ++clean;
      rank_sum += rank[i];
    }
  }
  if (clean == 0 || bad == 0) return std::nullopt;
  return (rank_sum - clean * (clean + 1) / 2) / (clean * bad);
}

namespace {

SubsetConfusion Confusion(std::span<const Subset> subsets,
                          std::span<const std::uint8_t> corrupted,
                          Subset which, int total_corrupted) {
  SubsetConfusion out;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    if (subsets[i] != which) continue;
    ++out.size;
    out.corrupted += corrupted[i] != 0;
  }
  if (out.size > 0) out.precision = static_cast<double>(out.corrupted) / out.size;
  if (total_corrupted > 0) {
    out.recall = static_cast<double>(out.corrupted) / total_corrupted;
  }
  return out;
}

nlohmann::json Optional(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json ToJson(const SubsetConfusion& c) {
  return {{"size", c.size},
          {"corrupted", c.corrupted},
          {"precision", Optional(c.precision)},
          {"recall", Optional(c.recall)}};
}

}  // namespace

NoiseDiagnostics NoiseAuc(std::span<const double> weights,
                          std::span<const Subset> subsets,
                          std::span<const std::uint8_t> corrupted) {
  if (subsets.size() != corrupted.size() || weights.size() != corrupted.size()) {
    throw std::invalid_argument("diagnostic inputs differ in length");
  }
  NoiseDiagnostics d;
  d.num_anchors = static_cast<int>(corrupted.size());
  d.num_corrupted = static_cast<int>(
      std::count_if(corrupted.begin(), corrupted.end(),
                    [](std::uint8_t c) { return c != 0; }));
  d.auc = MannWhitneyAuc(weights, corrupted);
  d.high_uncertainty =
      Confusion(subsets, corrupted, Subset::kHighUncertainty, d.num_corrupted);
  d.low_consensus =
      Confusion(subsets, corrupted, Subset::kLowConsensus, d.num_corrupted);
  if (d.num_anchors > 0) {
    const double n = d.num_anchors;
    d.fraction_high_uncertainty = d.high_uncertainty.size / n;
    d.fraction_low_consensus = d.low_consensus.size / n;
    d.fraction_clean =
        (n - d.high_uncertainty.size - d.low_consensus.size) / n;
  }
  return d;
}

nlohmann::json ToJson(const RankingReport& report, bool with_ranks) {
  nlohmann::json j = {{"direction", report.direction},
                      {"hits@1", report.hits1},
                      {"hits@5", report.hits5},
                      {"hits@10", report.hits10},
                      {"mrr", report.mrr},
                      {"queries", report.ranks.size()}};
  if (with_ranks) j["ranks"] = report.ranks;
  return j;
}

nlohmann::json ToJson(const NoiseDiagnostics& d) {
  return {{"auc", Optional(d.auc)},
          {"anchors", d.num_anchors},
          {"corrupted", d.num_corrupted},
          {"high_uncertainty", ToJson(d.high_uncertainty)},
          {"low_consensus", ToJson(d.low_consensus)},
          {"fractions",
           {{"S_C", d.fraction_clean},
            {"S_I", d.fraction_low_consensus},
            {"S_U", d.fraction_high_uncertainty}}}};
}

}  // namespace dnc
