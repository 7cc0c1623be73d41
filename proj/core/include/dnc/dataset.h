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
#ifndef DNC_DATASET_H_
#define DNC_DATASET_H_

// Data model for a pair of multi-modal knowledge graphs: entities with
// per-modality attribute features, within-graph structural triples, and
// inter-graph anchor pairs split into train/test.  Ground-truth annotations
// (planted counterparts, corruption masks, entity-attribute indicators) live
// alongside the data but are only reachable through EvalView; training code
// receives a TrainView.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dnc/types.h"

namespace dnc {

inline constexpr int kAbsent = -1;

enum class Side { kLeft, kRight };
enum class Split { kTrain, kTest };
enum class ModalityKind { kStructure, kVisual, kText };

std::string_view SideName(Side side);
std::string_view SplitName(Split split);

struct ModalitySpec {
  std::string name;
  int dim = 0;

  // "structure" is the graph modality, "text"/"name" are textual, anything
  // else is treated as a visual attribute.
  ModalityKind kind() const;
};

struct EntityRecord {
  int id = 0;
  std::string name;
  // Per modality: the feature row holding this entity's attribute, or kAbsent.
  std::vector<int> attribute_rows;
  // Ground-truth entity-attribute indicator h per modality (evaluation only).
  std::vector<std::uint8_t> ea_indicator;

  bool operator==(const EntityRecord&) const = default;
};

struct Triple {
  int head = 0;
  int relation = 0;
  int tail = 0;

  bool operator==(const Triple&) const = default;
};

struct CorruptionMask {
  bool ee = false;
  std::vector<std::uint8_t> ea_left;   // per modality
  std::vector<std::uint8_t> ea_right;  // per modality
  std::vector<std::uint8_t> aa;        // per modality

  bool any() const;
  bool operator==(const CorruptionMask&) const = default;
};

struct AnchorPair {
  int left = 0;
  int right = 0;
  Split split = Split::kTrain;
  // Ground truth (evaluation only).
  int planted_right = 0;
  CorruptionMask mask;

  bool operator==(const AnchorPair&) const = default;
};

// One entry of the injector's log.  Replaying the log in reverse order
// restores the pristine pair.
struct CorruptionEvent {
  enum class Kind { kEntityEntity, kEntityAttribute, kAttributeAttribute };

  Kind kind = Kind::kEntityEntity;
  Side side = Side::kRight;
  int modality = -1;
  int anchor = -1;
  int entity = -1;
  // ee: original right id; ea: entity whose row was moved into `entity`.
  int source = -1;
  // ee: replacement right id.
  int replacement = -1;
  // aa: feature row and name before perturbation.
  std::vector<float> original_row;
  std::string original_name;

  bool operator==(const CorruptionEvent&) const = default;
};

struct GraphSide {
  std::vector<EntityRecord> entities;
  std::vector<Triple> triples;
  std::vector<FeatureMatrix> features;  // per modality, one row per entity

  bool operator==(const GraphSide&) const = default;
};

struct MMKGPair {
  std::vector<ModalitySpec> modalities;
  GraphSide left;
  GraphSide right;
  std::vector<AnchorPair> anchors;
  std::uint64_t seed = 0;
  std::vector<CorruptionEvent> corruption_log;

  const GraphSide& side(Side s) const { return s == Side::kLeft ? left : right; }
  GraphSide& side(Side s) { return s == Side::kLeft ? left : right; }
  int num_modalities() const { return static_cast<int>(modalities.size()); }
  int FindModality(std::string_view name) const;  // -1 when missing

  bool operator==(const MMKGPair& other) const;
};

// Throws DataError when an anchor, triple, or attribute row is out of range,
// when an entity appears in more than one train anchor, or when a feature
// matrix disagrees with its ModalitySpec.
void Validate(const MMKGPair& pair);

// Train-visible projection: features, triples, names and annotated train
// anchors.  No masks, planted counterparts, or test anchors.
class TrainView {
 public:
  struct Annotation {
    int left;
    int right;
  };

  explicit TrainView(const MMKGPair& pair);

  const std::vector<ModalitySpec>& modalities() const {
    return pair_->modalities;
  }
  int num_modalities() const { return pair_->num_modalities(); }
  int num_entities(Side side) const;
  const std::vector<Triple>& triples(Side side) const;
  const std::string& name(Side side, int entity) const;
  // Feature row of `entity` for `modality`; empty span when absent.
  std::span<const float> attribute(Side side, int entity, int modality) const;
  int attribute_dim(int modality) const;
  const std::vector<Annotation>& train_annotations() const {
    return annotations_;
  }

 private:
  const MMKGPair* pair_;
  std::vector<Annotation> annotations_;
};

// Evaluation-only projection of the ground truth.
class EvalView {
 public:
  explicit EvalView(const MMKGPair& pair) : pair_(&pair) {}

  const MMKGPair& pair() const { return *pair_; }
  std::vector<const AnchorPair*> anchors(Split split) const;
  bool attribute_clean(Side side, int entity, int modality) const;

 private:
  const MMKGPair* pair_;
};

struct GenModality {
  std::string name;
  int dim = 0;
};

struct GenConfig {
  int n = 500;
  int latent_dim = 32;
  int clusters = 10;
  double cluster_spread = 2.0;
  std::vector<GenModality> modalities = {
      {"structure", 32}, {"image", 64}, {"text", 48}};
  double view_noise = 1.0;       // isotropic noise on each view
  double side_distortion = 0.3;  // right projection = left + distortion
  int neighbors = 4;
  int relations = 8;
  double edge_drop = 0.1;
  double missing_rate = 0.0;     // fraction of absent non-structural rows
  double train_ratio = 0.3;
  std::uint64_t seed = 7;
};

// Planted-equivalence synthetic pair; all corruption masks clear.
// Throws ConfigError for n < 4, any dim < 2, or clusters < 1.
MMKGPair GenerateSynthetic(const GenConfig& config);

struct NoiseRatios {
  double ee = 0.0;
  double ea = 0.0;
  double aa = 0.0;
};

struct InjectOptions {
  double aa_feature_scale = 1.0;  // multiple of the per-feature std
  double aa_char_rate = 0.3;      // fraction of name characters replaced
};

// Three-way noise injection.  Returns a new pair; `pair` is not modified.
// E-E: floor(ee * |train|) train anchors get a uniformly random wrong right
//      entity.
// E-A: per side and non-structural modality, floor(ea * eligible) entities
//      receive another entity's attribute row (within-graph derangement).
//      Eligible entities have the attribute and belong to no test anchor.
// A-A: per non-structural modality, floor(aa * eligible) train anchors have
//      the right entity's row perturbed with Gaussian noise; textual
//      modalities also get character replacements in the right name.
// Throws ConfigError for ratios outside [0,1] and DataError when no clean
// train anchor would remain.
MMKGPair InjectNoise(const MMKGPair& pair, const NoiseRatios& ratios,
                     std::uint64_t seed, const InjectOptions& options = {});

// Undoes every logged corruption (reverse order) and clears the masks.
MMKGPair ReplayPristine(const MMKGPair& pair);

void SavePair(const MMKGPair& pair, const std::filesystem::path& dir);
MMKGPair LoadPair(const std::filesystem::path& dir);

}  // namespace dnc

#endif  // DNC_DATASET_H_
