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
#include "dnc/reasoner.h"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dnc/errors.h"

namespace dnc {
namespace {

// splitmix64 finalizer.
std::uint64_t Mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t HashString(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string Answer(const std::string& label, int score) {
  return "[" + label + " SIMILARITY] = " + std::to_string(score) + " out of 10";
}

}  // namespace

MockReasoner::MockReasoner(std::vector<int> answer_key, double error_rate,
                           std::uint64_t seed)
    : answer_key_(std::move(answer_key)), error_rate_(error_rate), seed_(seed) {}

std::string MockReasoner::Complete(const ReasonerCall& call) {
  const std::string label = call.label.empty() ? "IMAGE" : call.label;
  if (call.query < 0 || call.query >= static_cast<int>(answer_key_.size()) ||
      answer_key_[call.query] < 0) {
    return Answer(label, 5);
  }
  bool match = answer_key_[call.query] == call.candidate;
  if (error_rate_ > 0.0) {
    std::uint64_t h = Mix(seed_ ^ HashString(call.modality));
    h = Mix(h ^ static_cast<std::uint64_t>(call.query));
    h = Mix(h ^ static_cast<std::uint64_t>(call.candidate));
    const double draw = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (draw < error_rate_) match = !match;
  }
  return Answer(label, match ? 10 : 0);
}

HttpReasoner::HttpReasoner(HttpReasonerOptions options)
    : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw ConfigError("ttr.endpoint is empty");
  if (options_.model.empty()) throw ConfigError("ttr.model is empty");
}

std::string HttpReasoner::Complete(const ReasonerCall& call) {
  nlohmann::json body = {
      {"model", options_.model},
      {"temperature", 0},
      {"messages", {{{"role", "user"}, {"content", call.prompt}}}}};
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!options_.token.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.token);
  }

  double backoff = options_.backoff_initial_seconds;
  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff = std::min(backoff * 2.0, options_.backoff_max_seconds);
    }
    httplib::Client client(options_.endpoint);
    const auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
    client.set_connection_timeout(
        std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(
        std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    auto res = client.Post(options_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ReasonerError("reasoner endpoint returned HTTP " +
                          std::to_string(res->status) + ": " + res->body);
    }
    const auto reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) {
      throw ReasonerError("reasoner endpoint returned invalid JSON");
    }
    try {
      return reply.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw ReasonerError("reasoner reply lacks choices[0].message.content");
    }
  }
  throw ReasonerError("reasoner unreachable after " +
                      std::to_string(options_.max_retries + 1) +
                      " attempts: " + last_error);
}

ReplayReasoner::ReplayReasoner(const std::filesystem::path& responses) {
  std::ifstream in(responses);
  if (!in) {
    throw ConfigError("cannot open replay log " + responses.string());
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ConfigError(responses.string() + ":" + std::to_string(line_no) +
                        ": not a JSON object");
    }
    try {
      Key key{j.at("query").get<int>(), j.at("modality").get<std::string>(),
              j.at("candidate").get<int>(), j.at("attempt").get<int>()};
      Record rec{j.value("text", std::string()), j.value("error", std::string())};
      records_[key] = std::move(rec);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(responses.string() + ":" + std::to_string(line_no) +
                        ": " + e.what());
    }
  }
}

std::string ReplayReasoner::Complete(const ReasonerCall& call) {
  auto it = records_.find(Key{call.query, call.modality, call.candidate,
                              call.attempt});
  if (it == records_.end()) {
    throw ReasonerError("no recorded response for query " +
                        std::to_string(call.query) + ", modality " +
                        call.modality + ", candidate " +
                        std::to_string(call.candidate) + ", attempt " +
                        std::to_string(call.attempt));
  }
  const std::string transport = "transport: ";
  if (it->second.error.rfind(transport, 0) == 0) {
    throw ReasonerError(it->second.error.substr(transport.size()));
  }
  return it->second.text;
}

std::unique_ptr<Reasoner> MakeReasoner(const TtrConfig& config,
                                       std::vector<int> answer_key,
                                       std::uint64_t seed) {
  if (config.backend == "mock") {
    return std::make_unique<MockReasoner>(std::move(answer_key),
                                          config.mock_error_rate, seed);
  }
  if (config.backend == "replay") {
    if (config.replay_log.empty()) {
      throw ConfigError("ttr.replay_log must name a ttr_responses.jsonl file");
    }
    return std::make_unique<ReplayReasoner>(config.replay_log);
  }
  if (config.backend == "http") {
    HttpReasonerOptions o;
    o.endpoint = config.endpoint;
    o.path = config.path;
    o.model = config.model;
    if (const char* token = std::getenv(config.token_env.c_str())) o.token = token;
    o.max_retries = config.max_retries;
    o.timeout_seconds = config.timeout_seconds;
    o.backoff_initial_seconds = config.backoff_initial_seconds;
    o.backoff_max_seconds = config.backoff_max_seconds;
    return std::make_unique<HttpReasoner>(std::move(o));
  }
  throw ConfigError("unknown ttr.backend '" + config.backend + "'");
}

}  // namespace dnc
