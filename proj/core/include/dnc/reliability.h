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
#ifndef DNC_RELIABILITY_H_
#define DNC_RELIABILITY_H_

// Reliability of a correspondence from two complementary signals:
// uncertainty (a Dirichlet opinion built from exp(tanh(s / tau)) evidence)
// and consensus (the clipped similarity at the annotated or estimated
// counterpart).  Also hosts the greedy counterpart estimator used when no
// annotation is available and the adaptive three-way pair division.

#include <span>
#include <string_view>
#include <vector>

#include "dnc/types.h"

namespace dnc {

// Subjective-logic opinion over K candidates.
struct DirichletOpinion {
  Vector evidence;        // e_j >= 0
  Vector alpha;           // e_j + 1
  Vector belief;          // e_j / Q
  Vector expected_prob;   // alpha_j / Q
  double strength = 0.0;     // Q = sum(alpha)
  double uncertainty = 1.0;  // K / Q

  static DirichletOpinion FromEvidence(Vector evidence);
  int num_candidates() const { return static_cast<int>(evidence.size()); }
};

// e_j = exp(tanh(s_j / tau)).  Throws std::invalid_argument for tau <= 0.
DirichletOpinion Evidence(std::span<const double> similarities, double tau);

// d(alpha_j)/d(s_j) for the evidence map above.
double EvidenceDerivative(double similarity, double tau);

// max(0, s . y) for a one-hot (or empty) correspondence.
double Consensus(std::span<const double> similarities,
                 std::span<const double> correspondence);
// One-hot shorthand; index < 0 means "no correspondence" and yields 0.
double Consensus(std::span<const double> similarities, int index);

// v(pi) = max over candidates of the mean of the rows in `subset`.
double SubsetValue(const std::vector<std::span<const double>>& rows,
                   std::span<const int> subset);

// v(pi + {m}) - v(pi).  Throws std::invalid_argument for an empty subset or
// when `candidate` is already a member.
double MarginalContribution(const std::vector<std::span<const double>>& rows,
                            std::span<const int> subset, int candidate);

// |pi_0| for M available modalities: floor(M/2)+1 when M >= 3, else 1.
int InitialSubsetSize(int available);

struct GreedySelection {
  std::vector<int> available;   // Pi: modalities with a non-zero row
  std::vector<int> initial;     // pi_0
  std::vector<int> selected;    // pi*, sorted
  // Marginal contribution against pi_0 per modality; 0 for pi_0 members
  // and unavailable modalities.
  std::vector<double> contributions;
  int estimated_index = -1;     // -1 when no modality is available
};

// Single sweep against pi_0: pi* = pi_0 + {m : v(pi_0 + m) - v(pi_0) > 0}.
// pi_0 holds the |pi_0| available rows with the highest maxima (ties to the
// lower modality index).  All-zero rows are treated as absent.
GreedySelection GreedyEstimate(
    const std::vector<std::span<const double>>& rows);

// w = (1 - u) * balance + c * (1 - balance).  Throws std::invalid_argument
// when balance is outside [0, 1].
double ReliabilityWeight(double uncertainty, double consensus, double balance);

enum class Subset { kClean, kLowConsensus, kHighUncertainty };

std::string_view SubsetName(Subset subset);

// Per-anchor statistics needed for the division.
struct PairStats {
  double uncertainty = 0.0;
  double consensus = 0.0;
  bool true_positive = false;  // argmax(s) == argmax(y)
};

enum class DivisionMode {
  kFull,             // S_U / S_I / S_C
  kUncertaintyOnly,  // S_U / S_C
  kConsensusOnly,    // S_I / S_C
  kNone,             // everything S_C
};

struct DivisionState {
  double beta_u = 0.0;
  double beta_c = 0.0;
  std::vector<int> true_positive;
  std::vector<Subset> tags;  // one per input record
  std::vector<int> clean;
  std::vector<int> low_consensus;
  std::vector<int> high_uncertainty;
};

// The exact membership predicate for thresholds (beta_u, beta_c).
Subset Classify(double uncertainty, double consensus, double beta_u,
                double beta_c, DivisionMode mode = DivisionMode::kFull);

// beta_u = min(max u over S^TP, 1 - beta), beta_c = max(beta, min c over
// S^TP); with an empty S^TP the thresholds fall back to (1 - beta, beta).
DivisionState DividePairs(std::span<const PairStats> records, double beta,
                          DivisionMode mode = DivisionMode::kFull);

// Uncertainty / consensus / weight at one level (entity or modality).
struct LevelReliability {
  double uncertainty = 1.0;
  double consensus = 0.0;
  double weight = 0.0;
};

struct ReliabilityRecord {
  int anchor = -1;
  int entity = -1;
  LevelReliability entity_level;
  std::vector<LevelReliability> modality_levels;
  Subset subset = Subset::kClean;
  int estimated_index = -1;
};

int ArgMax(std::span<const double> values);  // first maximum; -1 when empty

}  // namespace dnc

#endif  // DNC_RELIABILITY_H_
