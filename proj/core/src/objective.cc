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
#include "dnc/objective.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dnc/special_functions.h"

namespace dnc {
namespace {

void CheckFinite(std::span<const double> alpha, std::span<const double> target) {
  if (alpha.size() != target.size()) {
    throw std::invalid_argument("alpha and target lengths differ");
  }
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (!std::isfinite(alpha[j]) || !std::isfinite(target[j])) {
      throw std::domain_error("non-finite evidential loss input");
    }
  }
}

}  // namespace

LossVariant ParseLossVariant(std::string_view name) {
  if (name == "mse") return LossVariant::kMse;
  if (name == "ce") return LossVariant::kCe;
  throw std::invalid_argument("unknown objective variant '" + std::string(name) +
                              "'");
}

std::string_view LossVariantName(LossVariant variant) {
  return variant == LossVariant::kMse ? "mse" : "ce";
}

RefinedLabel RefineLabel(int annotated, std::span<const double> similarities,
                         double consensus, Subset subset) {
  const auto k = static_cast<Eigen::Index>(similarities.size());
  if (annotated < 0 || annotated >= k) {
    throw std::invalid_argument("annotated index out of range");
  }
  RefinedLabel label;
  label.values = Vector::Zero(k);
  switch (subset) {
    case Subset::kClean:
      label.values(annotated) = 1.0;
      label.provenance = Provenance::kAnnotated;
      return label;
    case Subset::kLowConsensus: {
      const Eigen::Map<const Vector> s(similarities.data(), k);
      const Vector shifted = (s.array() - s.maxCoeff()).exp();
      label.values = (1.0 - consensus) * shifted / shifted.sum();
      label.values(annotated) += consensus;
      label.provenance = Provenance::kBlended;
      return label;
    }
    case Subset::kHighUncertainty:
      break;
  }
  throw std::invalid_argument("high-uncertainty pairs are excluded, not refined");
}

RefinedLabel ExcludedLabel(int annotated, int num_candidates) {
  RefinedLabel label;
  label.values = Vector::Zero(num_candidates);
  if (annotated >= 0 && annotated < num_candidates) label.values(annotated) = 1.0;
  label.provenance = Provenance::kExcluded;
  return label;
}

double EvidentialMse(std::span<const double> alpha,
                     std::span<const double> target,
                     std::span<double> grad_alpha) {
  CheckFinite(alpha, target);
  const double q = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  double loss = 0.0;
  double sum_p2 = 0.0;
  double residual_dot_p = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    const double p = alpha[j] / q;
    const double r = target[j] - p;
    loss += r * r + alpha[j] * (q - alpha[j]) / (q * q * (q + 1.0));
    sum_p2 += p * p;
    residual_dot_p += r * p;
  }
  if (!grad_alpha.empty()) {
    const double var_tail = (1.0 - sum_p2) / ((q + 1.0) * (q + 1.0));
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      const double p = alpha[k] / q;
      const double d_sq = -2.0 / q * ((target[k] - p) - residual_dot_p);
      const double d_var = -2.0 / (q * (q + 1.0)) * (p - sum_p2) - var_tail;
      grad_alpha[k] = d_sq + d_var;
    }
  }
  return loss;
}

double EvidentialCe(std::span<const double> alpha,
                    std::span<const double> target,
                    std::span<double> grad_alpha) {
  CheckFinite(alpha, target);
  const double q = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  const double psi_q = Digamma(q);
  double mass = 0.0;
  double loss = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (target[j] == 0.0) continue;
    loss += target[j] * (psi_q - Digamma(alpha[j]));
    mass += target[j];
  }
  if (!grad_alpha.empty()) {
    const double tri_q = Trigamma(q);
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      grad_alpha[k] = mass * tri_q -
                      (target[k] == 0.0 ? 0.0 : target[k] * Trigamma(alpha[k]));
    }
  }
  return loss;
}

double DuallyRobustLoss(LossVariant variant, std::span<const double> alpha,
                        std::span<const double> target, Subset subset,
                        std::span<double> grad_alpha) {
  if (subset == Subset::kHighUncertainty) {
    CheckFinite(alpha, target);
    std::fill(grad_alpha.begin(), grad_alpha.end(), 0.0);
    return 0.0;
  }
  return variant == LossVariant::kMse ? EvidentialMse(alpha, target, grad_alpha)
                                      : EvidentialCe(alpha, target, grad_alpha);
}

double KlRegularizer(std::span<const double> alpha,
                     std::span<const double> target,
                     std::span<double> grad_alpha) {
  CheckFinite(alpha, target);
  const std::size_t k = alpha.size();
  std::vector<double> tilde(k);
  double strength = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    tilde[j] = target[j] + (1.0 - target[j]) * alpha[j];
    strength += tilde[j];
  }
  const double psi_s = Digamma(strength);
  double kl = LogGamma(strength) - LogGamma(static_cast<double>(k));
  for (std::size_t j = 0; j < k; ++j) {
    kl += -LogGamma(tilde[j]) + (tilde[j] - 1.0) * (Digamma(tilde[j]) - psi_s);
  }
  if (!grad_alpha.empty()) {
    const double shared = (strength - static_cast<double>(k)) * Trigamma(strength);
    for (std::size_t j = 0; j < k; ++j) {
      const double d_tilde = (tilde[j] - 1.0) * Trigamma(tilde[j]) - shared;
      grad_alpha[j] = d_tilde * (1.0 - target[j]);
    }
  }
  return kl;
}

double LossBreakdown::l_dr_total() const {
  return l_dr_entity +
         std::accumulate(l_dr_modality.begin(), l_dr_modality.end(), 0.0);
}

double LossBreakdown::l_reg_total() const {
  return l_reg_entity +
         std::accumulate(l_reg_modality.begin(), l_reg_modality.end(), 0.0);
}

namespace {

// Loss of one similarity row; writes d(loss)/d(s) into grad_s (scaled).
void RowLoss(std::span<const double> s, const RefinedLabel& label,
             Subset subset, const ObjectiveOptions& options, double scale,
             double* dr, double* reg, std::vector<double>* grad_s) {
  const std::size_t k = s.size();
  std::vector<double> alpha(k), g_dr(k), g_reg(k);
  for (std::size_t j = 0; j < k; ++j) {
    alpha[j] = std::exp(std::tanh(s[j] / options.tau)) + 1.0;
  }
  const std::span<const double> target(label.values.data(), k);
  const bool want_grad = grad_s != nullptr;
  *dr += scale * DuallyRobustLoss(options.variant, alpha, target, subset,
                                  want_grad ? std::span<double>(g_dr)
                                            : std::span<double>());
  *reg += scale * KlRegularizer(alpha, target,
                                want_grad ? std::span<double>(g_reg)
                                          : std::span<double>());
  if (want_grad) {
    grad_s->resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      (*grad_s)[j] = scale * (g_dr[j] + options.lambda * g_reg[j]) *
                     EvidenceDerivative(s[j], options.tau);
    }
  }
}

}  // namespace

LossBreakdown TotalLoss(const EncoderBank& bank, const EncoderInputs& inputs,
                        const Matrix& fusion_left, const Matrix& fusion_right,
                        std::span<const TrainTarget> targets,
                        const ObjectiveOptions& options, EncoderBank* grad) {
  const int num_m = bank.num_modalities();
  const int d = bank.embed_dim;
  LossBreakdown out;
  out.lambda = options.lambda;
  out.l_dr_modality.assign(num_m, 0.0);
  out.l_reg_modality.assign(num_m, 0.0);
  if (targets.empty()) return out;

  const EmbeddingTable table = Encode(bank, inputs);
  const FusedTable fused_left = Fuse(table.left, fusion_left);
  const FusedTable fused_right = Fuse(table.right, fusion_right);
  const double scale = 1.0 / static_cast<double>(targets.size());
  const bool want_grad = grad != nullptr;

  Matrix g_fused_left, g_fused_right;
  std::vector<Matrix> g_left(num_m), g_right(num_m);
  if (want_grad) {
    g_fused_left = Matrix::Zero(fused_left.rows.rows(), fused_left.rows.cols());
    g_fused_right = Matrix::Zero(fused_right.rows.rows(), fused_right.rows.cols());
    for (int m = 0; m < num_m; ++m) {
      g_left[m] = Matrix::Zero(table.left.modal[m].rows(), d);
      g_right[m] = Matrix::Zero(table.right.modal[m].rows(), d);
    }
  }

  std::vector<double> grad_s;
  for (const TrainTarget& t : targets) {
    // Entity level on the fused representation.
    const Vector s = fused_right.rows * fused_left.rows.row(t.left).transpose();
    RowLoss(AsSpan(s), t.label, t.subset, options, scale, &out.l_dr_entity,
            &out.l_reg_entity, want_grad ? &grad_s : nullptr);
    if (want_grad) {
      const Eigen::Map<const Vector> gs(grad_s.data(), grad_s.size());
      g_fused_left.row(t.left) += gs.transpose() * fused_right.rows;
      g_fused_right.noalias() += gs * fused_left.rows.row(t.left);
    }
    // Modality level.
    for (int m = 0; m < num_m; ++m) {
      if (t.modality_labels[m].values.size() == 0) continue;
      const Vector sm = table.right.modal[m] * table.left.modal[m].row(t.left).transpose();
      RowLoss(AsSpan(sm), t.modality_labels[m], t.modality_subsets[m], options,
              scale, &out.l_dr_modality[m], &out.l_reg_modality[m],
              want_grad ? &grad_s : nullptr);
      if (want_grad) {
        const Eigen::Map<const Vector> gs(grad_s.data(), grad_s.size());
        g_left[m].row(t.left) += gs.transpose() * table.right.modal[m];
        g_right[m].noalias() += gs * table.left.modal[m].row(t.left);
      }
    }
  }
  out.total = out.l_dr_total() + options.lambda * out.l_reg_total();

  if (want_grad) {
    FuseBackward(fused_left, fusion_left, g_fused_left, d, &g_left);
    FuseBackward(fused_right, fusion_right, g_fused_right, d, &g_right);
    EncodeBackward(bank, inputs, table, g_left, g_right, grad);
  }
  return out;
}

}  // namespace dnc
