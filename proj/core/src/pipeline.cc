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
#include "dnc/pipeline.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "dnc/encoders.h"
#include "dnc/errors.h"
#include "dnc/reasoner.h"

namespace dnc {
namespace {

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string());
}

void WriteText(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out << text;
}

void WriteJson(const fs::path& file, const nlohmann::json& j) {
  WriteText(file, j.dump(2) + "\n");
}

nlohmann::json ReadJson(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

void WriteJsonl(const fs::path& file, const std::vector<nlohmann::json>& rows) {
  std::string text;
  for (const nlohmann::json& r : rows) text += r.dump() + "\n";
  WriteText(file, text);
}

std::vector<int> PlantedKey(const MMKGPair& pair) {
  std::vector<int> key(pair.left.entities.size(), -1);
  for (const AnchorPair* a : EvalView(pair).anchors(Split::kTest)) {
    key[a->left] = a->planted_right;
  }
  return key;
}

std::string Percent(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << 100.0 * v;
  return s.str();
}

std::string Fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

void RunGenerate(const ExperimentConfig& config, const fs::path& out_dir) {
  EnsureDir(out_dir);
  GenConfig gen = config.data.gen;
  gen.seed = config.seed;
  SavePair(GenerateSynthetic(gen), out_dir / "data");
  SaveConfig(config, out_dir / "config.json");
}

void RunInject(const ExperimentConfig& config, const fs::path& data_dir,
               const fs::path& out_dir) {
  const MMKGPair pair = LoadPair(data_dir);
  EnsureDir(out_dir);
  SavePair(InjectNoise(pair, config.data.noise, NoiseSeed(config),
                       config.data.inject),
           out_dir / "data");
  SaveConfig(config, out_dir / "config.json");
}

void RunTrain(const ExperimentConfig& config, const fs::path& data_dir,
              const fs::path& run_dir) {
  const MMKGPair pair = LoadPair(data_dir);
  const TrainView view(pair);
  EnsureDir(run_dir);
  std::vector<nlohmann::json> log_rows;
  const TrainResult result =
      Train(view, TrainOptionsFor(config),
            [&](const EpochLog& log) { log_rows.push_back(ToJson(log)); });
  SaveCheckpoint(result.bank, run_dir / "checkpoint.bin");
  WriteJsonl(run_dir / "train.jsonl", log_rows);
  std::vector<nlohmann::json> rel;
  for (const ReliabilityRecord& r : result.final_targets.records) {
    rel.push_back(ToJson(r, pair.modalities));
  }
  WriteJsonl(run_dir / "reliability.jsonl", rel);
  SaveConfig(config, run_dir / "config.json");
}

RankingReport EvaluateRanking(const MMKGPair& pair, const Inference& inference,
                              bool bidirectional) {
  const auto test = EvalView(pair).anchors(Split::kTest);
  std::vector<RankQuery> forward, backward;
  for (const AnchorPair* a : test) {
    forward.push_back({a->left, a->planted_right});
    backward.push_back({a->planted_right, a->left});
  }
  RankingReport report = RankingMetrics(inference.scores, forward);
  if (!bidirectional) return report;
  const Matrix transposed = inference.scores.transpose();
  RankingReport reverse = RankingMetrics(transposed, backward);
  reverse.direction = "right_to_left";
  return AverageReports(report, reverse);
}

NoiseDiagnostics DiagnoseNoise(const MMKGPair& pair,
                               const std::vector<ReliabilityRecord>& records) {
  const auto train = EvalView(pair).anchors(Split::kTrain);
  if (train.size() != records.size()) {
    throw DataError("reliability records do not match the train anchors");
  }
  std::vector<double> weights;
  std::vector<Subset> subsets;
  std::vector<std::uint8_t> corrupted;
  for (std::size_t i = 0; i < train.size(); ++i) {
    weights.push_back(records[i].entity_level.weight);
    subsets.push_back(records[i].subset);
    corrupted.push_back(train[i]->mask.any());
  }
  return NoiseAuc(weights, subsets, corrupted);
}

TtrResult RunRethinking(const ExperimentConfig& config, const MMKGPair& pair,
                        const Inference& inference) {
  const int num_m = pair.num_modalities();
  std::vector<Matrix> modal(num_m);
  RerankInput input;
  input.prior = &inference.scores;
  input.modalities = pair.modalities;
  input.query_present = inference.table.left.present;
  for (int m = 0; m < num_m; ++m) {
    modal[m] = Similarity(inference.table.left.modal[m],
                          inference.table.right.modal[m]);
    input.modal.push_back(&modal[m]);
  }
  // Rethink weights come from greedy-estimated reliability.
  std::vector<ReliabilityRecord> records = inference.left_records;
  if (records.empty()) {
    const ModelConfig& model = config.model;
    records = EstimateReliability(inference.table, Side::kLeft, model.tau,
                                  model.balance);
  }
  input.weights = Matrix::Zero(pair.left.entities.size(), num_m);
  for (const ReliabilityRecord& r : records) {
    for (int m = 0; m < num_m; ++m) {
      input.weights(r.entity, m) = r.modality_levels[m].weight;
    }
  }
  for (const AnchorPair* a : EvalView(pair).anchors(Split::kTest)) {
    input.queries.push_back(a->left);
  }
  for (const EntityRecord& e : pair.left.entities) input.query_names.push_back(e.name);
  for (const EntityRecord& e : pair.right.entities) {
    input.candidate_names.push_back(e.name);
  }
  TtrOptions options;
  options.k = config.ttr.k;
  options.skip_threshold = config.ttr.skip_threshold;
  options.max_retries = config.ttr.max_retries;
  options.parallelism = config.ttr.parallelism;
  options.all_attributes = config.ttr.mode == "all_attributes";
  std::unique_ptr<Reasoner> reasoner =
      MakeReasoner(config.ttr, PlantedKey(pair), config.seed);
  return Rerank(input, *reasoner, options);
}

nlohmann::json BuildReport(const ExperimentConfig& config, const MMKGPair& pair,
                           const RankingReport& ranking,
                           const NoiseDiagnostics& noise,
                           const std::vector<EpochLog>& log,
                           const std::optional<RankingReport>& ttr_ranking) {
  const EvalView view(pair);
  const auto train = view.anchors(Split::kTrain);
  int ee = 0, any = 0;
  for (const AnchorPair* a : train) {
    ee += a->mask.ee;
    any += a->mask.any();
  }
  nlohmann::json j;
  j["config"] = ToJson(config);
  j["data"] = {{"left_entities", pair.left.entities.size()},
               {"right_entities", pair.right.entities.size()},
               {"train_anchors", train.size()},
               {"test_anchors", view.anchors(Split::kTest).size()},
               {"corrupted_train_anchors", any},
               {"ee_corrupted", ee},
               {"corruption_events", pair.corruption_log.size()}};
  j["ranking"] = ToJson(ranking);
  j["noise"] = ToJson(noise);
  if (!log.empty()) {
    j["training"] = {{"epochs", log.size()}, {"last_epoch", ToJson(log.back())}};
  }
  if (ttr_ranking) j["ttr_ranking"] = ToJson(*ttr_ranking);
  return j;
}

std::string RenderReportMarkdown(const nlohmann::json& r) {
  std::ostringstream md;
  md << "# Alignment report\n\n";
  md << "| metric | value |\n|---|---|\n";
  const auto& k = r["ranking"];
  md << "| direction | " << k["direction"].get<std::string>() << " |\n";
  md << "| Hits@1 | " << Percent(k["hits@1"].get<double>()) << " |\n";
  md << "| Hits@5 | " << Percent(k["hits@5"].get<double>()) << " |\n";
  md << "| Hits@10 | " << Percent(k["hits@10"].get<double>()) << " |\n";
  md << "| MRR | " << Fixed(k["mrr"].get<double>(), 4) << " |\n";
  md << "| test queries | " << k["queries"].get<int>() << " |\n";
  if (r.contains("ttr_ranking")) {
    const auto& t = r["ttr_ranking"];
    md << "| Hits@1 after rethinking | " << Percent(t["hits@1"].get<double>())
       << " |\n";
    md << "| MRR after rethinking | " << Fixed(t["mrr"].get<double>(), 4)
       << " |\n";
  }
  const auto& n = r["noise"];
  md << "\n## Train pair division\n\n";
  md << "| subset | share | corrupted members | precision | recall |\n"
     << "|---|---|---|---|---|\n";
  auto cell = [](const nlohmann::json& v) {
    return v.is_null() ? std::string("n/a") : Fixed(v.get<double>(), 3);
  };
  const auto& f = n["fractions"];
  md << "| S_C | " << Percent(f["S_C"].get<double>()) << "% | | | |\n";
  md << "| S_I | " << Percent(f["S_I"].get<double>()) << "% | "
     << n["low_consensus"]["corrupted"].get<int>() << " | "
     << cell(n["low_consensus"]["precision"]) << " | "
     << cell(n["low_consensus"]["recall"]) << " |\n";
  md << "| S_U | " << Percent(f["S_U"].get<double>()) << "% | "
     << n["high_uncertainty"]["corrupted"].get<int>() << " | "
     << cell(n["high_uncertainty"]["precision"]) << " | "
     << cell(n["high_uncertainty"]["recall"]) << " |\n";
  if (n["corrupted"].get<int>() > 0) {
    md << "\n## Noise diagnostics\n\n";
    md << "- corrupted train anchors: " << n["corrupted"].get<int>() << " of "
       << n["anchors"].get<int>() << "\n";
    md << "- reliability AUC (clean vs corrupted): " << cell(n["auc"]) << "\n";
  }
  return md.str();
}

nlohmann::json RunEvaluate(const ExperimentConfig& config,
                           const fs::path& data_dir, const fs::path& run_dir) {
  const MMKGPair pair = LoadPair(data_dir);
  const EncoderBank bank = LoadCheckpoint(run_dir / "checkpoint.bin");
  const TrainView view(pair);
  const Inference inference =
      Infer(bank, PrepareInputs(view), config.ablation.drf, config.model.tau,
            config.model.balance);
  const RankingReport ranking =
      EvaluateRanking(pair, inference, config.eval.bidirectional);

  // Division of the train anchors as dumped by train.
  std::vector<ReliabilityRecord> records;
  {
    std::ifstream in(run_dir / "reliability.jsonl");
    if (!in) throw DataError("missing " + (run_dir / "reliability.jsonl").string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        throw DataError("reliability.jsonl:" + std::to_string(line_no) +
                        ": invalid JSON");
      }
      ReliabilityRecord r;
      r.anchor = j.value("anchor", -1);
      r.entity = j.value("entity", -1);
      r.entity_level = {j.value("u", 1.0), j.value("c", 0.0), j.value("w", 0.0)};
      const std::string subset = j.value("subset", std::string("S_C"));
      r.subset = subset == "S_U"   ? Subset::kHighUncertainty
                 : subset == "S_I" ? Subset::kLowConsensus
                                   : Subset::kClean;
      records.push_back(r);
    }
  }
  const NoiseDiagnostics noise = DiagnoseNoise(pair, records);

  std::vector<EpochLog> log;
  if (std::ifstream in(run_dir / "train.jsonl"); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      EpochLog e;
      e.epoch = j.value("epoch", 0);
      e.warmup = j.value("warmup", false);
      e.l_dr = j.value("l_dr", 0.0);
      e.l_reg = j.value("l_reg", 0.0);
      e.total = j.value("total", 0.0);
      e.clean = j.value("S_C", 0);
      e.low_consensus = j.value("S_I", 0);
      e.high_uncertainty = j.value("S_U", 0);
      e.hits1_dev = j.value("hits@1_dev", 0.0);
      log.push_back(e);
    }
  }

  std::optional<RankingReport> ttr_ranking;
  if (config.ttr.enabled && config.ablation.ttr) {
    const TtrResult ttr = RunRethinking(config, pair, inference);
    Inference joint = inference;
    joint.scores = ttr.joint;
    ttr_ranking = EvaluateRanking(pair, joint, /*bidirectional=*/false);
  }
  const nlohmann::json report =
      BuildReport(config, pair, ranking, noise, log, ttr_ranking);
  WriteJson(run_dir / "report.json", report);
  WriteText(run_dir / "report.md", RenderReportMarkdown(report));
  return report;
}

nlohmann::json RunTtr(const ExperimentConfig& config, const fs::path& data_dir,
                      const fs::path& run_dir) {
  const MMKGPair pair = LoadPair(data_dir);
  const EncoderBank bank = LoadCheckpoint(run_dir / "checkpoint.bin");
  const TrainView view(pair);
  const Inference inference =
      Infer(bank, PrepareInputs(view), config.ablation.drf, config.model.tau,
            config.model.balance);
  const TtrResult ttr = RunRethinking(config, pair, inference);

  std::vector<nlohmann::json> requests, responses;
  for (const TtrLogEntry& e : ttr.log) {
    requests.push_back(ToJson(e.call));
    responses.push_back(ToJson(e));
  }
  WriteJsonl(run_dir / "ttr_requests.jsonl", requests);
  WriteJsonl(run_dir / "ttr_responses.jsonl", responses);
  std::string run_log;
  for (const ReasonerVerdict& v : ttr.verdicts) {
    if (v.fell_back) {
      run_log += "query " + std::to_string(v.query) +
                 ": reasoner failed, prior ranking kept: " + v.error + "\n";
    }
  }
  WriteText(run_dir / "ttr_run.log", run_log);

  Inference joint = inference;
  joint.scores = ttr.joint;
  const RankingReport before = EvaluateRanking(pair, inference, false);
  const RankingReport after = EvaluateRanking(pair, joint, false);
  nlohmann::json report = {{"backend", config.ttr.backend},
                           {"mode", config.ttr.mode},
                           {"k", config.ttr.k},
                           {"skip_threshold", config.ttr.skip_threshold},
                           {"queries", ttr.verdicts.size()},
                           {"rethought", ttr.rethought},
                           {"skipped", ttr.skipped},
                           {"fell_back", ttr.fell_back},
                           {"malformed", ttr.malformed},
                           {"calls", ttr.log.size()},
                           {"prior", ToJson(before)},
                           {"joint", ToJson(after)}};
  WriteJson(run_dir / "ttr_report.json", report);
  if (ttr.fell_back > 0 && ttr.fell_back == ttr.rethought + ttr.fell_back) {
    throw ReasonerError("reasoner failed for all " +
                        std::to_string(ttr.fell_back) +
                        " rethought queries; prior ranking kept");
  }
  return report;
}

nlohmann::json RunReport(const std::vector<fs::path>& run_dirs,
                         const fs::path& out_dir) {
  if (run_dirs.empty()) throw ConfigError("report needs at least one run");
  const std::vector<std::string> keys = {"hits@1", "hits@5", "hits@10", "mrr"};
  std::map<std::string, std::vector<double>> values;
  std::vector<double> aucs;
  nlohmann::json runs = nlohmann::json::array();
  for (const fs::path& dir : run_dirs) {
    const nlohmann::json r = ReadJson(dir / "report.json");
    for (const std::string& k : keys) {
      values[k].push_back(r.at("ranking").at(k).get<double>());
    }
    const auto& auc = r.at("noise").at("auc");
    if (!auc.is_null()) aucs.push_back(auc.get<double>());
    runs.push_back({{"run", dir.string()},
                    {"seed", r.at("config").at("seed")},
                    {"ranking", r.at("ranking")}});
  }
  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0;
    return nlohmann::json{{"mean", mean}, {"std", sd}, {"n", v.size()}};
  };
  nlohmann::json summary = {{"runs", runs}};
  for (const std::string& k : keys) summary["mean"][k] = stats(values[k]);
  summary["mean"]["auc"] =
      aucs.empty() ? nlohmann::json(nullptr) : stats(aucs);

  EnsureDir(out_dir);
  WriteJson(out_dir / "summary.json", summary);
  std::ostringstream md;
  md << "# Multi-seed summary\n\n| metric | mean | std | runs |\n|---|---|---|---|\n";
  for (const std::string& k : keys) {
    const auto& s = summary["mean"][k];
    md << "| " << k << " | " << Fixed(s["mean"].get<double>(), 4) << " | "
       << Fixed(s["std"].get<double>(), 4) << " | " << s["n"].get<int>()
       << " |\n";
  }
  if (!aucs.empty()) {
    const auto& s = summary["mean"]["auc"];
    md << "| reliability AUC | " << Fixed(s["mean"].get<double>(), 4) << " | "
       << Fixed(s["std"].get<double>(), 4) << " | " << s["n"].get<int>()
       << " |\n";
  }
  WriteText(out_dir / "summary.md", md.str());
  return summary;
}

ExperimentResult RunExperiment(const ExperimentConfig& config) {
  GenConfig gen = config.data.gen;
  gen.seed = config.seed;
  const MMKGPair pair = InjectNoise(GenerateSynthetic(gen), config.data.noise,
                                    NoiseSeed(config), config.data.inject);
  const TrainView view(pair);
  ExperimentResult out;
  const TrainResult trained = Train(view, TrainOptionsFor(config));
  out.log = trained.log;
  const Inference inference =
      Infer(trained.bank, PrepareInputs(view), config.ablation.drf,
            config.model.tau, config.model.balance);
  out.ranking = EvaluateRanking(pair, inference, config.eval.bidirectional);
  out.noise = DiagnoseNoise(pair, trained.final_targets.records);
  if (config.ttr.enabled && config.ablation.ttr) {
    const TtrResult ttr = RunRethinking(config, pair, inference);
    Inference joint = inference;
    joint.scores = ttr.joint;
    out.ttr_ranking = EvaluateRanking(pair, joint, false);
  }
  out.report =
      BuildReport(config, pair, out.ranking, out.noise, out.log, out.ttr_ranking);
  return out;
}

}  // namespace dnc
