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
#ifndef DNC_REASONER_H_
#define DNC_REASONER_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "dnc/config.h"
#include "dnc/ttr.h"

namespace dnc {

// Deterministic oracle: answers 10 for the keyed counterpart and 0 for any
// other candidate.  With probability `error_rate` (hashed from the call,
// not drawn from shared state) the answer is inverted.
class MockReasoner : public Reasoner {
 public:
  // `answer_key[query]` is the true candidate, or -1 when unknown (neutral
  // answer 5).
  MockReasoner(std::vector<int> answer_key, double error_rate = 0.0,
               std::uint64_t seed = 0);
  std::string Complete(const ReasonerCall& call) override;

 private:
  std::vector<int> answer_key_;
  double error_rate_;
  std::uint64_t seed_;
};

// Chat-completions client.  Transport errors, 429 and 5xx are retried with
// exponential backoff; other statuses fail immediately.
struct HttpReasonerOptions {
  std::string endpoint;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string token;     // empty: no Authorization header
  int max_retries = 3;
  double timeout_seconds = 60.0;
  double backoff_initial_seconds = 0.5;
  double backoff_max_seconds = 8.0;
};

class HttpReasoner : public Reasoner {
 public:
  explicit HttpReasoner(HttpReasonerOptions options);
  std::string Complete(const ReasonerCall& call) override;

 private:
  HttpReasonerOptions options_;
};

// Serves completions from a recorded ttr_responses.jsonl.  Recorded
// transport errors are replayed as ReasonerError; a missing record is a
// ReasonerError too.
class ReplayReasoner : public Reasoner {
 public:
  explicit ReplayReasoner(const std::filesystem::path& responses);
  std::string Complete(const ReasonerCall& call) override;
  std::size_t size() const { return records_.size(); }

 private:
  using Key = std::tuple<int, std::string, int, int>;
  struct Record {
    std::string text;
    std::string error;
  };
  std::map<Key, Record> records_;
};

// Builds the configured backend.  The mock needs `answer_key`; the http
// backend reads its token from the configured environment variable.
// Throws ConfigError for an unusable configuration.
std::unique_ptr<Reasoner> MakeReasoner(const TtrConfig& config,
                                       std::vector<int> answer_key,
                                       std::uint64_t seed);

}  // namespace dnc

#endif  // DNC_REASONER_H_
