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
#ifndef DNC_TTR_H_
#define DNC_TTR_H_

// Test-time rethinking of shortlisted attribute pairs.  For every query and
// rethinkable modality whose prior row is ambiguous, the top-k candidates
// are scored one by one by a reasoner; the 0..10 verdicts become a softmax
// row over the shortlist, rows are mixed with renormalized reliability
// weights, and the result is added to the prior fused score row.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dnc/dataset.h"
#include "dnc/types.h"

namespace dnc {

// True when the prior row is confident enough to skip: max >= threshold, or
// the max leads every other entry by at least threshold.
bool ShouldSkip(std::span<const double> prior, double threshold = 0.2);

// Indices of the top-k entries, descending; ties to the lower index.
std::vector<int> Shortlist(std::span<const double> row, int k);

struct ShortlistEntry {
  int id = 0;
  std::string name;
  double similarity = 0.0;
};

// Everything a prompt needs for one (query, modality, candidate) call.
struct RethinkRequest {
  int query = 0;
  std::string query_name;
  int modality = 0;
  ModalityKind kind = ModalityKind::kVisual;
  bool with_names = false;  // all-attributes prompt
  std::vector<ShortlistEntry> shortlist;
  int position = 0;  // index into shortlist of the candidate under review

  const ShortlistEntry& candidate() const { return shortlist[position]; }
};

// "IMAGE" for visual attributes, "NAME" for textual ones.
std::string VerdictLabel(ModalityKind kind);

// Deterministic four-part prompt: instruction, prior list, numbered steps,
// strict output contract.
std::string BuildPrompt(const RethinkRequest& request);

// Extracts A from "... = A out of 10".  Throws MalformedOutput when the
// pattern is missing or A lies outside 0..10.
int ParseVerdict(const std::string& text);

// (o - 5) / 5.
double NormalizeVerdict(int raw);

// Softmax (temperature 1) of normalized verdicts.
Vector RethinkRow(std::span<const double> normalized);

struct ReasonerCall {
  int query = 0;
  std::string modality;
  int candidate = 0;
  int attempt = 0;
  std::string label;  // verdict label expected in the answer
  std::string prompt;
};

// Backend contract: returns the raw completion text or throws ReasonerError
// on a transport failure.  Must be safe to call from several threads.
class Reasoner {
 public:
  virtual ~Reasoner() = default;
  virtual std::string Complete(const ReasonerCall& call) = 0;
};

struct TtrOptions {
  int k = 8;
  double skip_threshold = 0.2;
  int max_retries = 3;
  int parallelism = 4;
  bool all_attributes = false;
};

struct RerankInput {
  const Matrix* prior = nullptr;            // fused scores, queries x candidates
  std::vector<const Matrix*> modal;         // per-modality scores, same shape
  std::vector<ModalitySpec> modalities;
  std::vector<std::vector<std::uint8_t>> query_present;  // per modality
  Matrix weights;                           // queries x modalities
  std::vector<int> queries;                 // rows to rerank
  std::vector<std::string> query_names;     // optional, per query row
  std::vector<std::string> candidate_names; // optional, per candidate
};

struct ModalityVerdict {
  int modality = 0;
  bool skipped = false;
  bool absent = false;
  std::vector<int> candidates;      // shortlist
  std::vector<int> raw;             // o per shortlisted candidate
  std::vector<double> normalized;   // (o - 5) / 5
  Vector rethink;                   // softmax over the shortlist
  double weight = 0.0;              // renormalized weight
};

struct ReasonerVerdict {
  int query = 0;
  std::vector<ModalityVerdict> modalities;
  bool rethought = false;     // at least one modality participated
  bool fell_back = false;     // transport failure: prior ranking kept
  std::string error;
  Vector rethink;             // fused rethink row (full length)
  Vector joint;               // prior + rethink
  int prediction = -1;
};

struct TtrLogEntry {
  ReasonerCall call;
  std::string response;
  std::string error;  // "malformed", "transport: ..." or empty
};

struct TtrResult {
  std::vector<ReasonerVerdict> verdicts;  // aligned with input.queries
  Matrix joint;                           // prior with reranked rows replaced
  std::vector<TtrLogEntry> log;           // in deterministic order
  int rethought = 0;
  int skipped = 0;
  int fell_back = 0;
  int malformed = 0;
};

// Rethinkable modalities: visual always, textual in all-attributes mode.
bool Rethinkable(const ModalitySpec& modality, bool all_attributes);

TtrResult Rerank(const RerankInput& input, Reasoner& reasoner,
                 const TtrOptions& options);

nlohmann::json ToJson(const ReasonerCall& call);
nlohmann::json ToJson(const TtrLogEntry& entry);  // response-log record

}  // namespace dnc

#endif  // DNC_TTR_H_
