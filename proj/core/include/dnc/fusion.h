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
#ifndef DNC_FUSION_H_
#define DNC_FUSION_H_

#include <span>
#include <vector>

#include "dnc/encoders.h"
#include "dnc/reliability.h"
#include "dnc/types.h"

namespace dnc {

// Reliability-weighted concatenation of per-modality embeddings.
struct FusedTable {
  Matrix weighted;  // block m of row i is w_i^m * z_i^m
  Matrix rows;      // weighted rows, L2-renormalized when requested
  Vector norms;     // norms of the weighted rows
  std::vector<std::uint8_t> gated;  // 1 when reliability weights applied
  bool renormalized = true;
};

// Entity passes the gate when (1 - u) + c >= 1.
bool PassesFusionGate(const LevelReliability& entity_level);

// Effective n x M weight matrix.  Entities without a record or failing the
// gate (when `gate` is on) get unit weights.  An empty `records` span
// means plain concatenation for everyone.
Matrix FusionWeights(std::span<const ReliabilityRecord> records, int entities,
                     int modalities, bool gate,
                     std::vector<std::uint8_t>* gated = nullptr);

// Throws std::invalid_argument when the weight matrix does not cover every
// modality of `side`.
FusedTable Fuse(const SideEmbeddings& side, const Matrix& weights,
                bool renormalize = true);
FusedTable Fuse(const SideEmbeddings& side,
                std::span<const ReliabilityRecord> records, bool gate,
                bool renormalize = true);

// Back-propagates d(loss)/d(rows) into per-modality embedding gradients
// (accumulating).  Weights are treated as constants.
void FuseBackward(const FusedTable& fused, const Matrix& weights,
                  const Matrix& grad_rows, int embed_dim,
                  std::vector<Matrix>* grad_modal);

// Test-time style reliability for every entity of `query` against the
// other side: greedy-estimated counterpart from the per-modality rows,
// per-modality (u, c, w) from each modality's own row, and entity-level
// (u, c, w) from the unit-weight fused row.
std::vector<ReliabilityRecord> EstimateReliability(const EmbeddingTable& table,
                                                   Side query, double tau,
                                                   double balance);
// Same from precomputed query x other similarity matrices: one per modality
// plus the unit-weight fused one.
std::vector<ReliabilityRecord> EstimateReliability(
    const std::vector<Matrix>& modal_sims, const Matrix& fused_sim,
    const std::vector<std::vector<std::uint8_t>>& query_present, double tau,
    double balance);

}  // namespace dnc

#endif  // DNC_FUSION_H_
