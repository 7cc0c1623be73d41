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
#include <numeric>
#include <stdexcept>

namespace dnc {

DirichletOpinion DirichletOpinion::FromEvidence(Vector evidence) {
  DirichletOpinion op;
  const double k = static_cast<double>(evidence.size());
  op.alpha = evidence.array() + 1.0;
  op.strength = op.alpha.sum();
  op.uncertainty = k / op.strength;
  op.belief = evidence / op.strength;
  op.expected_prob = op.alpha / op.strength;
  op.evidence = std::move(evidence);
  return op;
}

DirichletOpinion Evidence(std::span<const double> similarities, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
  Vector e(similarities.size());
  for (std::size_t j = 0; j < similarities.size(); ++j) {
    e(j) = std::exp(std::tanh(similarities[j] / tau));
  }
  return DirichletOpinion::FromEvidence(std::move(e));
}

double EvidenceDerivative(double similarity, double tau) {
  const double t = std::tanh(similarity / tau);
  return std::exp(t) * (1.0 - t * t) / tau;
}

double Consensus(std::span<const double> similarities,
                 std::span<const double> correspondence) {
  double dot = 0.0;
  for (std::size_t j = 0; j < similarities.size(); ++j) {
    dot += similarities[j] * correspondence[j];
  }
  return std::max(0.0, dot);
}

double Consensus(std::span<const double> similarities, int index) {
  if (index < 0) return 0.0;
  return std::max(0.0, similarities[index]);
}

int ArgMax(std::span<const double> values) {
  if (values.empty()) return -1;
  return static_cast<int>(std::max_element(values.begin(), values.end()) -
                          values.begin());
}

namespace {

Vector MeanRow(const std::vector<std::span<const double>>& rows,
               std::span<const int> subset) {
  Vector mean = Vector::Zero(rows[subset[0]].size());
  for (int m : subset) {
    mean += Eigen::Map<const Vector>(rows[m].data(), rows[m].size());
  }
  return mean / static_cast<double>(subset.size());
}

bool IsZeroRow(std::span<const double> row) {
  return std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; });
}

}  // namespace

double SubsetValue(const std::vector<std::span<const double>>& rows,
                   std::span<const int> subset) {
  if (subset.empty()) throw std::invalid_argument("value of an empty subset");
  return MeanRow(rows, subset).maxCoeff();
}

double MarginalContribution(const std::vector<std::span<const double>>& rows,
                            std::span<const int> subset, int candidate) {
  if (subset.empty()) {
    throw std::invalid_argument("marginal contribution needs a non-empty subset");
  }
  if (std::find(subset.begin(), subset.end(), candidate) != subset.end()) {
    throw std::invalid_argument("candidate already belongs to the subset");
  }
  std::vector<int> grown(subset.begin(), subset.end());
  grown.push_back(candidate);
  return SubsetValue(rows, grown) - SubsetValue(rows, subset);
}

int InitialSubsetSize(int available) {
  if (available <= 0) return 0;
  return available >= 3 ? available / 2 + 1 : 1;
}

GreedySelection GreedyEstimate(
    const std::vector<std::span<const double>>& rows) {
  GreedySelection sel;
  const int num_m = static_cast<int>(rows.size());
  sel.contributions.assign(num_m, 0.0);
  std::vector<double> peak(num_m, 0.0);
  for (int m = 0; m < num_m; ++m) {
    if (rows[m].empty() || IsZeroRow(rows[m])) continue;
    sel.available.push_back(m);
    peak[m] = *std::max_element(rows[m].begin(), rows[m].end());
  }
  if (sel.available.empty()) return sel;

  std::vector<int> order = sel.available;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return peak[a] > peak[b]; });
  const int init = InitialSubsetSize(static_cast<int>(sel.available.size()));
  sel.initial.assign(order.begin(), order.begin() + init);
  std::sort(sel.initial.begin(), sel.initial.end());

  sel.selected = sel.initial;
  const double base = SubsetValue(rows, sel.initial);
  for (int m : sel.available) {
    if (std::binary_search(sel.initial.begin(), sel.initial.end(), m)) continue;
    std::vector<int> grown = sel.initial;
    grown.push_back(m);
    const double delta = SubsetValue(rows, grown) - base;
    sel.contributions[m] = delta;
    if (delta > 0.0) sel.selected.push_back(m);
  }
  std::sort(sel.selected.begin(), sel.selected.end());
  const Vector mean = MeanRow(rows, sel.selected);
  sel.estimated_index = ArgMax(AsSpan(mean));
  return sel;
}

double ReliabilityWeight(double uncertainty, double consensus, double balance) {
  if (!(balance >= 0.0 && balance <= 1.0)) {
    throw std::invalid_argument("balance must lie in [0, 1]");
  }
  return (1.0 - uncertainty) * balance + consensus * (1.0 - balance);
}

std::string_view SubsetName(Subset subset) {
  switch (subset) {
    case Subset::kClean:
      return "S_C";
    case Subset::kLowConsensus:
      return "S_I";
    case Subset::kHighUncertainty:
      return "S_U";
  }
  return "";
}

Subset Classify(double uncertainty, double consensus, double beta_u,
                double beta_c, DivisionMode mode) {
  const bool uncertain = uncertainty > beta_u;
  const bool disagreeing = consensus < beta_c;
  switch (mode) {
    case DivisionMode::kFull:
      if (uncertain) return Subset::kHighUncertainty;
      return disagreeing ? Subset::kLowConsensus : Subset::kClean;
    case DivisionMode::kUncertaintyOnly:
      return uncertain ? Subset::kHighUncertainty : Subset::kClean;
    case DivisionMode::kConsensusOnly:
      return disagreeing ? Subset::kLowConsensus : Subset::kClean;
    case DivisionMode::kNone:
      return Subset::kClean;
  }
  return Subset::kClean;
}

DivisionState DividePairs(std::span<const PairStats> records, double beta,
                          DivisionMode mode) {
  DivisionState state;
  double max_u = -1.0;
  double min_c = 2.0;
  for (int i = 0; i < static_cast<int>(records.size()); ++i) {
    if (!records[i].true_positive) continue;
    state.true_positive.push_back(i);
    max_u = std::max(max_u, records[i].uncertainty);
    min_c = std::min(min_c, records[i].consensus);
  }
  if (state.true_positive.empty()) {
    state.beta_u = 1.0 - beta;
    state.beta_c = beta;
  } else {
    state.beta_u = std::min(max_u, 1.0 - beta);
    state.beta_c = std::max(beta, min_c);
  }
  state.tags.reserve(records.size());
  for (int i = 0; i < static_cast<int>(records.size()); ++i) {
    const Subset tag = Classify(records[i].uncertainty, records[i].consensus,
                                state.beta_u, state.beta_c, mode);
    state.tags.push_back(tag);
    switch (tag) {
      case Subset::kClean:
        state.clean.push_back(i);
        break;
      case Subset::kLowConsensus:
        state.low_consensus.push_back(i);
        break;
      case Subset::kHighUncertainty:
        state.high_uncertainty.push_back(i);
        break;
    }
  }
  return state;
}

}  // namespace dnc
