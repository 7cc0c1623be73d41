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
// Drives the dncalign binary and checks exit codes and outputs.

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_util.h"

namespace {

int RunCli(const std::string& args, const std::filesystem::path& err) {
  const std::string cmd = std::string(DNC_CLI_PATH) + " " + args + " >/dev/null 2>" +
                          err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Cli, EndToEndWithOverrides) {
  const auto root = dnc::testing::TempDir("cli");
  const auto err = root / "err.txt";
  const std::string small = " --data.n 60 --objective.epochs 2";
  ASSERT_EQ(RunCli("generate -o " + (root / "gen").string() + small, err), 0)
      << Slurp(err);
  ASSERT_EQ(RunCli("inject -d " + (root / "gen").string() + " -o " +
                    (root / "noisy").string() + " --data.noise.ee=0.2",
                err),
            0)
      << Slurp(err);
  ASSERT_EQ(RunCli("train -d " + (root / "noisy").string() + " -o " +
                    (root / "run").string() + " --ablation only_unc",
                err),
            0)
      << Slurp(err);
  const auto cfg = nlohmann::json::parse(Slurp(root / "run" / "config.json"));
  EXPECT_EQ(cfg["ablation"]["only_unc"], true);
  EXPECT_EQ(cfg["objective"]["epochs"], 2);
  ASSERT_EQ(RunCli("evaluate -d " + (root / "noisy").string() + " -r " +
                    (root / "run").string(),
                err),
            0)
      << Slurp(err);
  ASSERT_EQ(RunCli("ttr -d " + (root / "noisy").string() + " -r " +
                    (root / "run").string() +
                    " --ttr.backend mock --ttr.k 4 --ttr.skip-threshold 0.9",
                err),
            0)
      << Slurp(err);
  EXPECT_TRUE(std::filesystem::exists(root / "run" / "ttr_responses.jsonl"));
  ASSERT_EQ(RunCli("report -o " + (root / "sum").string() + " " +
                    (root / "run").string(),
                err),
            0);
  EXPECT_TRUE(std::filesystem::exists(root / "sum" / "summary.json"));
  std::filesystem::remove_all(root);
}

TEST(Cli, ExitCodesAndErrorJson) {
  const auto root = dnc::testing::TempDir("cli_err");
  const auto err = root / "err.txt";
  EXPECT_EQ(RunCli("generate -o " + root.string() + " --model.tau=oops", err), 2);
  const auto j = nlohmann::json::parse(Slurp(err));
  EXPECT_EQ(j["error"], "config");
  EXPECT_EQ(RunCli("generate -o " + root.string() + " --no.such.key 1", err), 2);
  EXPECT_EQ(RunCli("frobnicate", err), 2);
  EXPECT_EQ(RunCli("train -d " + (root / "missing").string() + " -o " +
                    (root / "run").string(),
                err),
            3);
  EXPECT_EQ(nlohmann::json::parse(Slurp(err))["error"], "data");
  std::filesystem::remove_all(root);
}

TEST(Cli, ReasonerFailureExitCode) {
  const auto root = dnc::testing::TempDir("cli_ttr");
  const auto err = root / "err.txt";
  const std::string small = " --data.n 40 --objective.epochs 1";
  ASSERT_EQ(RunCli("generate -o " + (root / "gen").string() + small, err), 0);
  ASSERT_EQ(RunCli("train -d " + (root / "gen").string() + " -o " +
                    (root / "run").string(),
                err),
            0);
  // A replay log without matching records cannot answer any call.
  std::ofstream(root / "empty.jsonl") << "";
  const int code = RunCli("ttr -d " + (root / "gen").string() + " -r " +
                           (root / "run").string() +
                           " --ttr.backend replay --ttr.skip-threshold 0.9"
                           " --ttr.replay-log " + (root / "empty.jsonl").string(),
                       err);
  // Every call misses: prior ranking kept, logs written, exit code 4.
  EXPECT_EQ(code, 4) << Slurp(err);
  EXPECT_EQ(nlohmann::json::parse(Slurp(err))["error"], "reasoner");
  const auto report = nlohmann::json::parse(Slurp(root / "run" / "ttr_report.json"));
  EXPECT_GT(report["fell_back"].get<int>(), 0);
  EXPECT_EQ(report["prior"], report["joint"]);
  std::filesystem::remove_all(root);
}

}  // namespace
