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
#ifndef DNC_ENCODERS_H_
#define DNC_ENCODERS_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dnc/dataset.h"
#include "dnc/types.h"

namespace dnc {

// x -> x * weight + bias, weight is dim_in x embed_dim.
struct AffineMap {
  Matrix weight;
  Vector bias;
};

// Per-modality encoders.  All modalities emit embeddings of the same
// dimension; the structure modality sees neighbour-mean aggregated features.
struct EncoderBank {
  int embed_dim = 0;
  std::vector<ModalitySpec> modalities;
  std::vector<AffineMap> maps;

  // Gaussian weights with std 1/sqrt(dim_in), zero bias.
  static EncoderBank Initialize(const std::vector<ModalitySpec>& modalities,
                                int embed_dim, std::uint64_t seed);
  // Same shapes, all zeros (gradient accumulator).
  static EncoderBank ZerosLike(const EncoderBank& bank);

  int num_modalities() const { return static_cast<int>(maps.size()); }
  Eigen::Index num_parameters() const;
  Vector Flatten() const;
  void Assign(const Vector& flat);
};

struct SideInputs {
  std::vector<Matrix> features;                   // per modality
  std::vector<std::vector<std::uint8_t>> present;  // per modality, per entity
};

struct EncoderInputs {
  SideInputs left;
  SideInputs right;

  const SideInputs& side(Side s) const { return s == Side::kLeft ? left : right; }
};

// Materializes absent attributes as zero rows and applies one round of
// neighbour-mean aggregation (self included) to the structure modality.
EncoderInputs PrepareInputs(const TrainView& view);

struct SideEmbeddings {
  std::vector<Matrix> modal;                       // per modality, n x d
  std::vector<Vector> norms;                       // pre-normalization norms
  std::vector<std::vector<std::uint8_t>> present;  // per modality
};

// Per-side, per-modality embeddings.  Rows are unit-norm, or zero for
// absent attributes.
struct EmbeddingTable {
  SideEmbeddings left;
  SideEmbeddings right;

  const SideEmbeddings& side(Side s) const {
    return s == Side::kLeft ? left : right;
  }
  int num_modalities() const { return static_cast<int>(left.modal.size()); }
};

// Throws DataError when an input dimension disagrees with the bank.
EmbeddingTable Encode(const EncoderBank& bank, const EncoderInputs& inputs);

// Accumulates d(loss)/d(parameters) into `grad` given d(loss)/d(embedding)
// for every side and modality (matrices shaped like the table).
void EncodeBackward(const EncoderBank& bank, const EncoderInputs& inputs,
                    const EmbeddingTable& table,
                    const std::vector<Matrix>& grad_left,
                    const std::vector<Matrix>& grad_right, EncoderBank* grad);

// s_ij = left_i . right_j.
Matrix Similarity(const Matrix& left, const Matrix& right);

// Binary checkpoint: u64 little-endian header length, a JSON header listing
// tensor names/shapes/offsets, then the f32le payloads.
void SaveCheckpoint(const EncoderBank& bank, const std::filesystem::path& file);
EncoderBank LoadCheckpoint(const std::filesystem::path& file);

}  // namespace dnc

#endif  // DNC_ENCODERS_H_
