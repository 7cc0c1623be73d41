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
#ifndef DNC_CONFIG_H_
#define DNC_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "dnc/dataset.h"
#include "dnc/objective.h"
#include "dnc/reliability.h"

namespace dnc {

struct DataConfig {
  GenConfig gen;
  NoiseRatios noise;
  InjectOptions inject;
};

struct ModelConfig {
  int embed_dim = 32;
  double tau = 0.07;
  double balance = 0.5;
};

struct ObjectiveConfig {
  double lambda = 1e-4;
  double beta = 0.3;
  LossVariant variant = LossVariant::kMse;
  int warmup_epochs = 5;
  int epochs = 100;
  double lr = 1e-3;
  int batch_size = 32;
};

struct TtrConfig {
  bool enabled = false;
  std::string backend = "mock";  // mock | http | replay
  int k = 8;
  double skip_threshold = 0.2;
  int max_retries = 3;
  int parallelism = 4;
  std::string mode = "non_name";  // non_name | all_attributes
  double mock_error_rate = 0.0;
  std::string endpoint = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string token_env = "DNC_REASONER_TOKEN";
  std::string replay_log;
  double timeout_seconds = 60.0;
  double backoff_initial_seconds = 0.5;
  double backoff_max_seconds = 8.0;
};

struct AblationConfig {
  bool drl = true;
  bool drf = true;
  bool ttr = true;
  bool only_unc = false;
  bool only_cons = false;
};

struct EvalConfig {
  bool bidirectional = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  DataConfig data;
  ModelConfig model;
  ObjectiveConfig objective;
  TtrConfig ttr;
  AblationConfig ablation;
  EvalConfig eval;

  bool operator==(const ExperimentConfig& other) const;
};

// Division mode implied by the ablation flags.
DivisionMode DivisionModeFor(const AblationConfig& ablation);

nlohmann::json ToJson(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys and ill-typed values throw
// ConfigError.
ExperimentConfig ConfigFromJson(const nlohmann::json& json);

ExperimentConfig LoadConfig(const std::filesystem::path& file);
void SaveConfig(const ExperimentConfig& config,
                const std::filesystem::path& file);

// Sets one key by dotted path ("ttr.k", "objective.variant").  Hyphens in
// path components are read as underscores.  The value is parsed as JSON
// when possible and as a plain string otherwise.
void ApplyOverride(ExperimentConfig& config, std::string_view dotted_key,
                   std::string_view value);

// Named presets: full, wo_drl, wo_drf, wo_ttr, only_unc, only_cons,
// baseline (wo_drl + plain concatenation).
void ApplyAblationPreset(ExperimentConfig& config, std::string_view preset);

// Derived seeds for independent random streams.
std::uint64_t NoiseSeed(const ExperimentConfig& config);
std::uint64_t InitSeed(const ExperimentConfig& config);
std::uint64_t ShuffleSeed(const ExperimentConfig& config);

}  // namespace dnc

#endif  // DNC_CONFIG_H_
