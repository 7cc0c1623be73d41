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
// Command-line driver: generate, inject, train, evaluate, ttr, report.
//
// Any flag of the form --section.key VALUE (or --section.key=VALUE)
// overrides the matching config key, e.g. --ttr.backend mock.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dnc/config.h"
#include "dnc/errors.h"
#include "dnc/pipeline.h"

namespace fs = std::filesystem;

namespace {

constexpr int kConfigExit = 2;
constexpr int kDataExit = 3;
constexpr int kReasonerExit = 4;

int Fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message},
                              {"exit_code", code}}
                   .dump()
            << "\n";
  return code;
}

struct CommonFlags {
  std::string config_file;
  std::string ablation;
  long long seed = -1;
};

// Turns leftover "--a.b v" / "--a.b=v" tokens into config overrides.
void ApplyExtras(dnc::ExperimentConfig& config,
                 const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& token = extras[i];
    if (token.rfind("--", 0) != 0 || token.find('.') == std::string::npos) {
      throw dnc::ConfigError("unknown argument: " + token);
    }
    std::string key = token.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= extras.size()) {
        throw dnc::ConfigError("missing value for --" + key);
      }
      value = extras[++i];
    }
    dnc::ApplyOverride(config, key, value);
  }
}

dnc::ExperimentConfig ResolveConfig(const CommonFlags& flags,
                                    const std::vector<std::string>& extras,
                                    const fs::path& fallback_dir) {
  dnc::ExperimentConfig config;
  if (!flags.config_file.empty()) {
    config = dnc::LoadConfig(flags.config_file);
  } else if (!fallback_dir.empty() && fs::exists(fallback_dir / "config.json")) {
    config = dnc::LoadConfig(fallback_dir / "config.json");
  }
  if (!flags.ablation.empty()) dnc::ApplyAblationPreset(config, flags.ablation);
  if (flags.seed >= 0) {
    dnc::ApplyOverride(config, "seed", std::to_string(flags.seed));
  }
  ApplyExtras(config, extras);
  return config;
}

void AddCommon(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("-c,--config", flags.config_file, "JSON config file");
  cmd->add_option("--ablation", flags.ablation,
                  "preset: full, wo_drl, wo_drf, wo_ttr, only_unc, "
                  "only_cons, baseline");
  cmd->add_option("--seed", flags.seed, "experiment seed");
  cmd->allow_extras();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust multi-modal entity alignment under noisy correspondence"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string out, data, run;
  std::vector<std::string> runs;

  auto* generate = app.add_subcommand("generate", "synthesize a planted pair");
  AddCommon(generate, flags);
  generate->add_option("-o,--out", out, "output directory")->required();

  auto* inject = app.add_subcommand("inject", "inject noisy correspondence");
  AddCommon(inject, flags);
  inject->add_option("-d,--data", data, "input dataset directory")->required();
  inject->add_option("-o,--out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train the encoders");
  AddCommon(train, flags);
  train->add_option("-d,--data", data, "dataset directory")->required();
  train->add_option("-o,--out", out, "run directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "rank the test anchors");
  AddCommon(evaluate, flags);
  evaluate->add_option("-d,--data", data, "dataset directory")->required();
  evaluate->add_option("-r,--run", run, "run directory")->required();

  auto* ttr = app.add_subcommand("ttr", "rerank with a reasoner");
  AddCommon(ttr, flags);
  ttr->add_option("-d,--data", data, "dataset directory")->required();
  ttr->add_option("-r,--run", run, "run directory")->required();

  auto* report = app.add_subcommand("report", "aggregate runs");
  report->add_option("-o,--out", out, "output directory")->required();
  report->add_option("runs", runs, "run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return Fail(kConfigExit, "config", e.what());
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    const std::vector<std::string> extras = cmd->remaining();
    if (cmd == generate) {
      dnc::RunGenerate(ResolveConfig(flags, extras, {}), out);
    } else if (cmd == inject) {
      dnc::RunInject(ResolveConfig(flags, extras, data), fs::path(data) / "data",
                     out);
    } else if (cmd == train) {
      dnc::RunTrain(ResolveConfig(flags, extras, data), fs::path(data) / "data",
                    out);
    } else if (cmd == evaluate) {
      const auto r = dnc::RunEvaluate(ResolveConfig(flags, extras, run),
                                      fs::path(data) / "data", run);
      std::cout << r.at("ranking").dump() << "\n";
    } else if (cmd == ttr) {
      const auto r = dnc::RunTtr(ResolveConfig(flags, extras, run),
                                 fs::path(data) / "data", run);
      std::cout << r.dump() << "\n";
    } else if (cmd == report) {
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      std::cout << dnc::RunReport(dirs, out).at("mean").dump() << "\n";
    }
  } catch (const dnc::ConfigError& e) {
    return Fail(kConfigExit, "config", e.what());
  } catch (const dnc::ReasonerError& e) {
    return Fail(kReasonerExit, "reasoner", e.what());
  } catch (const dnc::DataError& e) {
    return Fail(kDataExit, "data", e.what());
  } catch (const std::exception& e) {
    return Fail(kDataExit, "data", e.what());
  }
  return EXIT_SUCCESS;
}
