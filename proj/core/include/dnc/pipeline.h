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
#ifndef DNC_PIPELINE_H_
#define DNC_PIPELINE_H_

// End-to-end commands.  Every command is a pure function of (config, inputs)
// and writes deterministic files: rerunning with the same config and seed
// reproduces them byte for byte.
//
// Layout:
//   generate: <out>/data/...           pristine pair
//   inject:   <out>/data/...           noisy pair (masks.json holds the log)
//   train:    <out>/checkpoint.bin, train.jsonl, reliability.jsonl,
//             config.json
//   evaluate: <run>/report.json, report.md
//   ttr:      <run>/ttr_requests.jsonl, ttr_responses.jsonl, ttr_run.log,
//             ttr_report.json
//   report:   <out>/summary.json, summary.md

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dnc/config.h"
#include "dnc/dataset.h"
#include "dnc/eval.h"
#include "dnc/trainer.h"
#include "dnc/ttr.h"

namespace dnc {

namespace fs = std::filesystem;

void RunGenerate(const ExperimentConfig& config, const fs::path& out_dir);
void RunInject(const ExperimentConfig& config, const fs::path& data_dir,
               const fs::path& out_dir);
void RunTrain(const ExperimentConfig& config, const fs::path& data_dir,
              const fs::path& run_dir);
nlohmann::json RunEvaluate(const ExperimentConfig& config,
                           const fs::path& data_dir, const fs::path& run_dir);
nlohmann::json RunTtr(const ExperimentConfig& config, const fs::path& data_dir,
                      const fs::path& run_dir);
nlohmann::json RunReport(const std::vector<fs::path>& run_dirs,
                         const fs::path& out_dir);

// Test-query ranking of a trained bank (left to right, or both directions
// averaged).
RankingReport EvaluateRanking(const MMKGPair& pair, const Inference& inference,
                              bool bidirectional);

// Reliability diagnostics of the train anchors against the injected masks.
NoiseDiagnostics DiagnoseNoise(const MMKGPair& pair,
                               const std::vector<ReliabilityRecord>& records);

// Test-time rethinking of the test queries with the configured backend.
// The mock backend is keyed to the planted counterparts.
TtrResult RunRethinking(const ExperimentConfig& config, const MMKGPair& pair,
                        const Inference& inference);

struct ExperimentResult {
  RankingReport ranking;
  NoiseDiagnostics noise;
  std::optional<RankingReport> ttr_ranking;
  std::vector<EpochLog> log;
  nlohmann::json report;  // same content as report.json
};

// generate -> inject -> train -> evaluate in memory.
ExperimentResult RunExperiment(const ExperimentConfig& config);

// Assembles report.json.
nlohmann::json BuildReport(const ExperimentConfig& config, const MMKGPair& pair,
                           const RankingReport& ranking,
                           const NoiseDiagnostics& noise,
                           const std::vector<EpochLog>& log,
                           const std::optional<RankingReport>& ttr_ranking);
std::string RenderReportMarkdown(const nlohmann::json& report);

}  // namespace dnc

#endif  // DNC_PIPELINE_H_
