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
#ifndef DNC_OBJECTIVE_H_
#define DNC_OBJECTIVE_H_

// Closed-form evidential objectives.  For a query with Dirichlet parameters
// alpha (length K, alpha_j >= 1) and target ŷ:
//
//   MSE  : sum_j (ŷ_j - alpha_j/Q)^2 + alpha_j (Q - alpha_j) / (Q^2 (Q + 1))
//   CE   : sum_j ŷ_j (psi(Q) - psi(alpha_j))
//   Reg  : KL[Dir(ŷ + (1 - ŷ) * alpha) || Dir(1)]
//
// The dually robust term is switched off for high-uncertainty pairs.  The
// combined objective adds the entity-level and per-modality terms and
// back-propagates through evidence, similarities, fusion and the encoders.

#include <span>
#include <string_view>
#include <vector>

#include "dnc/encoders.h"
#include "dnc/fusion.h"
#include "dnc/reliability.h"
#include "dnc/types.h"

namespace dnc {

enum class LossVariant { kMse, kCe };

LossVariant ParseLossVariant(std::string_view name);  // "mse" | "ce"
std::string_view LossVariantName(LossVariant variant);

enum class Provenance { kAnnotated, kBlended, kExcluded };

struct RefinedLabel {
  Vector values;
  Provenance provenance = Provenance::kAnnotated;
};

// S_C keeps the annotation; S_I blends it with softmax(s) by consensus.
// Throws std::invalid_argument for S_U.
RefinedLabel RefineLabel(int annotated, std::span<const double> similarities,
                         double consensus, Subset subset);

// Label for an S_U pair: the annotation is kept for the regularizer only.
RefinedLabel ExcludedLabel(int annotated, int num_candidates);

// Each loss returns its value and, when `grad_alpha` is non-empty, writes
// d(loss)/d(alpha) into it.  Throws std::domain_error on non-finite input.
double EvidentialMse(std::span<const double> alpha,
                     std::span<const double> target,
                     std::span<double> grad_alpha = {});
double EvidentialCe(std::span<const double> alpha,
                    std::span<const double> target,
                    std::span<double> grad_alpha = {});
// Zero (and zero gradient) for S_U.
double DuallyRobustLoss(LossVariant variant, std::span<const double> alpha,
                        std::span<const double> target, Subset subset,
                        std::span<double> grad_alpha = {});
double KlRegularizer(std::span<const double> alpha,
                     std::span<const double> target,
                     std::span<double> grad_alpha = {});

// Everything the loss needs to know about one train anchor.  Labels are
// frozen when the division is refreshed.
struct TrainTarget {
  int left = 0;
  int right = 0;
  Subset subset = Subset::kClean;
  RefinedLabel label;
  std::vector<Subset> modality_subsets;
  // Empty values mean the left attribute is absent: no modality term.
  std::vector<RefinedLabel> modality_labels;
};

struct ObjectiveOptions {
  double tau = 0.07;
  double lambda = 1e-4;
  LossVariant variant = LossVariant::kMse;
};

struct LossBreakdown {
  double l_dr_entity = 0.0;
  std::vector<double> l_dr_modality;
  double l_reg_entity = 0.0;
  std::vector<double> l_reg_modality;
  double lambda = 0.0;
  double total = 0.0;

  double l_dr_total() const;
  double l_reg_total() const;
};

// Mean over `targets` of L_DR + lambda * L_Reg, both summed over the entity
// level and every modality.  Fusion weights (entities x modalities per side)
// are constants.  When `grad` is non-null, parameter gradients are
// accumulated into it.
LossBreakdown TotalLoss(const EncoderBank& bank, const EncoderInputs& inputs,
                        const Matrix& fusion_left, const Matrix& fusion_right,
                        std::span<const TrainTarget> targets,
                        const ObjectiveOptions& options,
                        EncoderBank* grad = nullptr);

}  // namespace dnc

#endif  // DNC_OBJECTIVE_H_
