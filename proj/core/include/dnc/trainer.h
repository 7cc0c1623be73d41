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
#ifndef DNC_TRAINER_H_
#define DNC_TRAINER_H_

#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "dnc/config.h"
#include "dnc/dataset.h"
#include "dnc/encoders.h"
#include "dnc/fusion.h"
#include "dnc/objective.h"
#include "dnc/reliability.h"

namespace dnc {

struct TrainOptions {
  ModelConfig model;
  ObjectiveConfig objective;
  DivisionMode division = DivisionMode::kFull;
  bool drf = true;
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;
};

TrainOptions TrainOptionsFor(const ExperimentConfig& config);

// Fused tables and scores for every left query against every right entity.
struct Inference {
  EmbeddingTable table;
  std::vector<ReliabilityRecord> left_records;   // greedy-estimated
  std::vector<ReliabilityRecord> right_records;
  Matrix weights_left;
  Matrix weights_right;
  FusedTable fused_left;
  FusedTable fused_right;
  Matrix scores;  // n_left x n_right
};

// With `drf` off both sides use plain concatenation.
Inference Infer(const EncoderBank& bank, const EncoderInputs& inputs, bool drf,
                double tau, double balance);

// Targets for one epoch plus the reliability picture they came from.
struct EpochTargets {
  std::vector<TrainTarget> targets;           // one per train anchor
  std::vector<ReliabilityRecord> records;     // annotated consensus
  DivisionState division;                     // entity level
  std::vector<DivisionState> modality_division;
  Matrix weights_left;
  Matrix weights_right;
  double hits1 = 0.0;  // share of anchors whose fused argmax is annotated
};

// Recomputes reliability, division and refined labels.  During warm-up
// every pair is treated as clean.
EpochTargets RefreshTargets(const EncoderBank& bank, const EncoderInputs& inputs,
                            const std::vector<TrainView::Annotation>& anchors,
                            const TrainOptions& options, bool warmup);

struct EpochLog {
  int epoch = 0;
  bool warmup = false;
  double l_dr = 0.0;
  double l_reg = 0.0;
  double total = 0.0;
  int clean = 0;
  int low_consensus = 0;
  int high_uncertainty = 0;
  double hits1_dev = 0.0;
};

nlohmann::json ToJson(const EpochLog& log);

// Adam without weight decay.
class AdamOptimizer {
 public:
  AdamOptimizer(Eigen::Index size, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);
  void Step(Vector& params, const Vector& grad);

 private:
  double lr_, beta1_, beta2_, epsilon_;
  Vector m_, v_;
  long steps_ = 0;
};

struct TrainResult {
  EncoderBank bank;
  std::vector<EpochLog> log;
  EpochTargets final_targets;  // refreshed after the last epoch
};

TrainResult Train(const TrainView& view, const TrainOptions& options,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// reliability.jsonl record.
nlohmann::json ToJson(const ReliabilityRecord& record,
                      const std::vector<ModalitySpec>& modalities);

}  // namespace dnc

#endif  // DNC_TRAINER_H_
