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
#include "dnc/ttr.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <regex>
#include <sstream>
#include <thread>

#include "dnc/errors.h"
#include "dnc/reliability.h"

namespace dnc {

bool ShouldSkip(std::span<const double> prior, double threshold) {
  if (prior.empty()) return true;
  const auto top = std::max_element(prior.begin(), prior.end());
  if (*top >= threshold) return true;
  for (auto it = prior.begin(); it != prior.end(); ++it) {
    if (it == top || *it == *top) continue;
    if (*top - *it < threshold) return false;
  }
  // Every non-max entry trails by the threshold (or there is none).
  return true;
}

std::vector<int> Shortlist(std::span<const double> row, int k) {
  std::vector<int> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  const int take = std::min<int>(k, static_cast<int>(row.size()));
  std::partial_sort(order.begin(), order.begin() + take, order.end(),
                    [&](int a, int b) {
                      return row[a] > row[b] || (row[a] == row[b] && a < b);
                    });
  order.resize(take);
  return order;
}

std::string VerdictLabel(ModalityKind kind) {
  return kind == ModalityKind::kText ? "NAME" : "IMAGE";
}

namespace {

std::string Describe(int id, const std::string& name, bool with_names) {
  std::string out = "ID:" + std::to_string(id);
  if (with_names) out += " Name:" + name;
  return out;
}

std::string Fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string BuildPrompt(const RethinkRequest& r) {
  const bool textual = r.kind == ModalityKind::kText;
  const std::string label = VerdictLabel(r.kind);
  const std::string letter = textual ? "B" : "A";
  const std::string query = Describe(r.query, r.query_name, r.with_names);
  const ShortlistEntry& cand = r.candidate();
  const std::string candidate = Describe(cand.id, cand.name, r.with_names);
  const std::string what = textual ? "names" : "images";

  std::ostringstream out;
  out << "## Task\n"
      << "Decide whether two entities from different knowledge graphs refer "
         "to the same real-world entity, using the given "
      << (r.with_names ? "names, images" : what)
      << " and the prior retrieval results.\n"
      << "Query " << (textual ? "name" : "image") << ": <" << query << ">\n"
      << "Candidate " << (textual ? "name" : "image") << ": <" << candidate
      << ">\n\n";

  out << "## Prior results\n"
      << "Prior retrieval ranking by " << (textual ? "name" : "visual")
      << " similarity for the query (" << query << ") "
      << (r.with_names ? "[Format: ID Name Similarity]:\n"
                       : "[Format: ID Similarity]:\n");
  for (const ShortlistEntry& e : r.shortlist) {
    out << "- " << e.id;
    if (r.with_names) out << " " << e.name;
    out << " " << Fixed2(e.similarity) << "\n";
  }
  out << "\n";

  out << "## Rethink " << (textual ? "name" : "image") << " similarity\n"
      << "The query is " << query << " and the candidate is " << candidate
      << ". Judge step by step how likely they are the same entity:\n";
  if (textual) {
    out << "1. Revisit the name similarities in light of the prior ranking.\n"
        << "2. Compare the spelling and wording of the two names in detail.\n"
        << "3. Consider aliases, abbreviations and other links between the "
           "names.\n";
  } else {
    out << "1. Revisit the visual similarities in light of the prior "
           "ranking and the two images.\n"
        << "2. Compare the detailed visual content of the two images.\n"
        << "3. Consider any underlying connection between the two images.\n";
  }
  out << "\n## Output\n"
      << "Reply with exactly one line: [" << label << " SIMILARITY] = "
      << letter << " out of 10, where " << letter
      << " is an integer from 0 (very low) to 10 (very high). Output "
         "nothing else; the line must read [" << label << " SIMILARITY] = "
      << letter << " out of 10.\n";
  return out.str();
}

int ParseVerdict(const std::string& text) {
  static const std::regex kPattern(R"(=\s*(-?\d+)\s*out\s+of\s+10)",
                                   std::regex::icase);
  std::smatch match;
  if (!std::regex_search(text, match, kPattern)) {
    throw MalformedOutput("no '= A out of 10' verdict", text);
  }
  const std::string digits = match[1].str();
  if (digits.size() > 3) throw MalformedOutput("verdict out of range", text);
  const int value = std::stoi(digits);
  if (value < 0 || value > 10) {
    throw MalformedOutput("verdict out of range", text);
  }
  return value;
}

double NormalizeVerdict(int raw) { return (raw - 5) / 5.0; }

Vector RethinkRow(std::span<const double> normalized) {
  const Eigen::Map<const Vector> v(normalized.data(), normalized.size());
  if (v.size() == 0) return Vector();
  const Vector e = (v.array() - v.maxCoeff()).exp();
  return e / e.sum();
}

bool Rethinkable(const ModalitySpec& modality, bool all_attributes) {
  switch (modality.kind()) {
    case ModalityKind::kVisual:
      return true;
    case ModalityKind::kText:
      return all_attributes;
    case ModalityKind::kStructure:
      return false;
  }
  return false;
}

namespace {

struct Job {
  int query_slot = 0;
  int modality_slot = 0;
  int position = 0;
  RethinkRequest request;
};

struct JobResult {
  int raw = 5;
  bool transport_failure = false;
  bool malformed = false;
  std::string error;
  std::vector<TtrLogEntry> attempts;
};

JobResult RunJob(const Job& job, const RerankInput& input, Reasoner& reasoner,
                 int max_retries) {
  JobResult result;
  ReasonerCall call;
  call.query = input.queries[job.query_slot];
  call.modality = input.modalities[job.request.modality].name;
  call.candidate = job.request.candidate().id;
  call.label = VerdictLabel(job.request.kind);
  call.prompt = BuildPrompt(job.request);
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    call.attempt = attempt;
    TtrLogEntry entry;
    entry.call = call;
    try {
      entry.response = reasoner.Complete(call);
    } catch (const ReasonerError& e) {
      entry.error = std::string("transport: ") + e.what();
      result.attempts.push_back(std::move(entry));
      result.transport_failure = true;
      result.error = e.what();
      return result;
    }
    try {
      result.raw = ParseVerdict(entry.response);
      result.attempts.push_back(std::move(entry));
      return result;
    } catch (const MalformedOutput&) {
      entry.error = "malformed";
      result.attempts.push_back(std::move(entry));
    }
  }
  result.malformed = true;
  result.raw = 5;
  return result;
}

}  // namespace

TtrResult Rerank(const RerankInput& input, Reasoner& reasoner,
                 const TtrOptions& options) {
  if (input.prior == nullptr) throw std::invalid_argument("missing prior scores");
  const Matrix& prior = *input.prior;
  const int num_m = static_cast<int>(input.modalities.size());
  if (static_cast<int>(input.modal.size()) != num_m) {
    throw std::invalid_argument("one score matrix per modality required");
  }
  const bool names = options.all_attributes && !input.query_names.empty() &&
                     !input.candidate_names.empty();

  TtrResult result;
  result.joint = prior;
  result.verdicts.resize(input.queries.size());

  // Plan every call up front so that results merge by position.
  std::vector<Job> jobs;
  for (std::size_t qs = 0; qs < input.queries.size(); ++qs) {
    const int q = input.queries[qs];
    ReasonerVerdict& v = result.verdicts[qs];
    v.query = q;
    for (int m = 0; m < num_m; ++m) {
      if (!Rethinkable(input.modalities[m], options.all_attributes)) continue;
      ModalityVerdict mv;
      mv.modality = m;
      const auto row = RowSpan(*input.modal[m], q);
      if (!input.query_present[m][q]) {
        mv.absent = true;
      } else if (ShouldSkip(row, options.skip_threshold)) {
        mv.skipped = true;
      } else {
        mv.candidates = Shortlist(row, options.k);
        RethinkRequest req;
        req.query = q;
        req.modality = m;
        req.kind = input.modalities[m].kind();
        req.with_names = names;
        if (names) req.query_name = input.query_names[q];
        for (int c : mv.candidates) {
          req.shortlist.push_back(
              {c, names ? input.candidate_names[c] : std::string(), row[c]});
        }
        for (std::size_t p = 0; p < mv.candidates.size(); ++p) {
          req.position = static_cast<int>(p);
          jobs.push_back({static_cast<int>(qs),
                          static_cast<int>(v.modalities.size()),
                          static_cast<int>(p), req});
        }
        mv.raw.assign(mv.candidates.size(), 5);
      }
      v.modalities.push_back(std::move(mv));
    }
  }

  std::vector<JobResult> done(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      done[i] = RunJob(jobs[i], input, reasoner, options.max_retries);
    }
  };
  const int threads =
      std::max(1, std::min<int>(options.parallelism, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& job = jobs[i];
    JobResult& r = done[i];
    ReasonerVerdict& v = result.verdicts[job.query_slot];
    v.modalities[job.modality_slot].raw[job.position] = r.raw;
    if (r.transport_failure) {
      v.fell_back = true;
      if (v.error.empty()) v.error = r.error;
    }
    result.malformed += r.malformed;
    for (TtrLogEntry& e : r.attempts) result.log.push_back(std::move(e));
  }

  const Eigen::Index n_cand = prior.cols();
  for (ReasonerVerdict& v : result.verdicts) {
    v.rethink = Vector::Zero(n_cand);
    double weight_sum = 0.0;
    int participating = 0;
    for (ModalityVerdict& mv : v.modalities) {
      if (mv.candidates.empty()) continue;
      ++participating;
      mv.normalized.resize(mv.raw.size());
      std::transform(mv.raw.begin(), mv.raw.end(), mv.normalized.begin(),
                     NormalizeVerdict);
      mv.rethink = RethinkRow(mv.normalized);
      mv.weight = std::max(0.0, input.weights(v.query, mv.modality));
      weight_sum += mv.weight;
    }
    for (ModalityVerdict& mv : v.modalities) {
      if (mv.candidates.empty()) continue;
      mv.weight = weight_sum > 0.0 ? mv.weight / weight_sum
                                   : 1.0 / participating;
      for (std::size_t p = 0; p < mv.candidates.size(); ++p) {
        v.rethink(mv.candidates[p]) += mv.weight * mv.rethink(p);
      }
    }
    v.rethought = participating > 0 && !v.fell_back;
    if (participating == 0) ++result.skipped;
    if (v.fell_back) {
      ++result.fell_back;
      v.rethink.setZero();
    }
    result.rethought += v.rethought;
    v.joint = prior.row(v.query).transpose() + v.rethink;
    v.prediction = ArgMax(AsSpan(v.joint));
    result.joint.row(v.query) = v.joint.transpose();
  }
  return result;
}

nlohmann::json ToJson(const ReasonerCall& call) {
  return {{"query", call.query},
          {"modality", call.modality},
          {"candidate", call.candidate},
          {"attempt", call.attempt},
          {"prompt", call.prompt}};
}

nlohmann::json ToJson(const TtrLogEntry& e) {
  nlohmann::json j = {{"query", e.call.query},
                      {"modality", e.call.modality},
                      {"candidate", e.call.candidate},
                      {"attempt", e.call.attempt},
                      {"text", e.response}};
  if (!e.error.empty()) j["error"] = e.error;
  return j;
}

}  // namespace dnc
