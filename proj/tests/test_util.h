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
// Small fixtures shared by the unit tests.

#ifndef DNC_TESTS_TEST_UTIL_H_
#define DNC_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "dnc/config.h"
#include "dnc/dataset.h"

namespace dnc::testing {

inline GenConfig SmallGen(int n = 60, std::uint64_t seed = 11) {
  GenConfig g;
  g.n = n;
  g.seed = seed;
  return g;
}

inline ExperimentConfig QuickConfig(int n = 80, int epochs = 3) {
  ExperimentConfig c;
  c.data.gen.n = n;
  c.objective.epochs = epochs;
  c.objective.warmup_epochs = 1;
  return c;
}

inline std::vector<double> RandomRow(std::mt19937_64& rng, int n, double lo,
                                     double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> row(n);
  for (double& x : row) x = d(rng);
  return row;
}

// Fresh directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("dncalign_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dnc::testing

#endif  // DNC_TESTS_TEST_UTIL_H_
