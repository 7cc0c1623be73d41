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
#include "dnc/fusion.h"

#include <stdexcept>

namespace dnc {

bool PassesFusionGate(const LevelReliability& entity_level) {
  return (1.0 - entity_level.uncertainty) + entity_level.consensus >= 1.0;
}

Matrix FusionWeights(std::span<const ReliabilityRecord> records, int entities,
                     int modalities, bool gate,
                     std::vector<std::uint8_t>* gated) {
  Matrix weights = Matrix::Ones(entities, modalities);
  if (gated) gated->assign(entities, 0);
  for (const ReliabilityRecord& r : records) {
    if (r.entity < 0 || r.entity >= entities) continue;
    if (gate && !PassesFusionGate(r.entity_level)) continue;
    for (int m = 0; m < modalities; ++m) {
      weights(r.entity, m) = r.modality_levels.at(m).weight;
    }
    if (gated) (*gated)[r.entity] = 1;
  }
  return weights;
}

FusedTable Fuse(const SideEmbeddings& side, const Matrix& weights,
                bool renormalize) {
  const int num_m = static_cast<int>(side.modal.size());
  if (num_m == 0 || weights.cols() != num_m ||
      weights.rows() != side.modal[0].rows()) {
    throw std::invalid_argument("fusion weights do not match the embeddings");
  }
  const Eigen::Index n = side.modal[0].rows();
  const Eigen::Index d = side.modal[0].cols();
  FusedTable fused;
  fused.renormalized = renormalize;
  fused.weighted.resize(n, num_m * d);
  for (int m = 0; m < num_m; ++m) {
    fused.weighted.middleCols(m * d, d) =
        side.modal[m].array().colwise() * weights.col(m).array();
  }
  fused.norms = fused.weighted.rowwise().norm();
  fused.rows = fused.weighted;
  if (renormalize) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fused.norms(i) > 0.0) fused.rows.row(i) /= fused.norms(i);
    }
  }
  fused.gated.assign(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    fused.gated[i] = (weights.row(i).array() != 1.0).any() ? 1 : 0;
  }
  return fused;
}

FusedTable Fuse(const SideEmbeddings& side,
                std::span<const ReliabilityRecord> records, bool gate,
                bool renormalize) {
  if (side.modal.empty()) throw std::invalid_argument("missing modality table");
  std::vector<std::uint8_t> gated;
  const Matrix weights =
      FusionWeights(records, static_cast<int>(side.modal[0].rows()),
                    static_cast<int>(side.modal.size()), gate, &gated);
  FusedTable fused = Fuse(side, weights, renormalize);
  fused.gated = std::move(gated);
  return fused;
}

void FuseBackward(const FusedTable& fused, const Matrix& weights,
                  const Matrix& grad_rows, int embed_dim,
                  std::vector<Matrix>* grad_modal) {
  Matrix grad_weighted = grad_rows;
  if (fused.renormalized) {
    for (Eigen::Index i = 0; i < grad_weighted.rows(); ++i) {
      if (fused.norms(i) == 0.0) {
        grad_weighted.row(i).setZero();
        continue;
      }
      const double proj = fused.rows.row(i).dot(grad_rows.row(i));
      grad_weighted.row(i) =
          (grad_rows.row(i) - proj * fused.rows.row(i)) / fused.norms(i);
    }
  }
  for (int m = 0; m < static_cast<int>(grad_modal->size()); ++m) {
    (*grad_modal)[m].array() +=
        grad_weighted.middleCols(m * embed_dim, embed_dim).array().colwise() *
        weights.col(m).array();
  }
}

std::vector<ReliabilityRecord> EstimateReliability(const EmbeddingTable& table,
                                                   Side query, double tau,
                                                   double balance) {
  const SideEmbeddings& q = table.side(query);
  const SideEmbeddings& other =
      table.side(query == Side::kLeft ? Side::kRight : Side::kLeft);
  const int num_m = static_cast<int>(q.modal.size());
  const Eigen::Index n = q.modal[0].rows();

  std::vector<Matrix> sims;
  sims.reserve(num_m);
  for (int m = 0; m < num_m; ++m) {
    sims.push_back(Similarity(q.modal[m], other.modal[m]));
  }
  const Matrix unit_weights_q = Matrix::Ones(n, num_m);
  const Matrix unit_weights_o = Matrix::Ones(other.modal[0].rows(), num_m);
  const Matrix fused_sim = Similarity(Fuse(q, unit_weights_q).rows,
                                      Fuse(other, unit_weights_o).rows);

  return EstimateReliability(sims, fused_sim, q.present, tau, balance);
}

std::vector<ReliabilityRecord> EstimateReliability(
    const std::vector<Matrix>& sims, const Matrix& fused_sim,
    const std::vector<std::vector<std::uint8_t>>& present, double tau,
    double balance) {
  const int num_m = static_cast<int>(sims.size());
  const Eigen::Index n = fused_sim.rows();
  std::vector<ReliabilityRecord> records(n);
  std::vector<std::span<const double>> rows(num_m);
  for (Eigen::Index i = 0; i < n; ++i) {
    ReliabilityRecord& rec = records[i];
    rec.entity = static_cast<int>(i);
    for (int m = 0; m < num_m; ++m) {
      rows[m] = present[m][i] ? RowSpan(sims[m], i) : std::span<const double>();
    }
    const GreedySelection sel = GreedyEstimate(rows);
    rec.estimated_index = sel.estimated_index;
    rec.modality_levels.resize(num_m);
    for (int m = 0; m < num_m; ++m) {
      LevelReliability& level = rec.modality_levels[m];
      if (!present[m][i]) {
        level = {1.0, 0.0, 0.0};
        continue;
      }
      level.uncertainty = Evidence(rows[m], tau).uncertainty;
      level.consensus = Consensus(rows[m], sel.estimated_index);
      level.weight = ReliabilityWeight(level.uncertainty, level.consensus, balance);
    }
    const std::span<const double> fused_row = RowSpan(fused_sim, i);
    rec.entity_level.uncertainty = Evidence(fused_row, tau).uncertainty;
    rec.entity_level.consensus = Consensus(fused_row, sel.estimated_index);
    rec.entity_level.weight =
        ReliabilityWeight(rec.entity_level.uncertainty,
                          rec.entity_level.consensus, balance);
  }
  return records;
}

}  // namespace dnc
