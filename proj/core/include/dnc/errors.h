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

#ifndef DNC_ERRORS_H_
#define DNC_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dnc {

// Invalid experiment configuration or command-line override.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed, missing, or inconsistent dataset / checkpoint content.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The test-time reasoner backend failed (transport, replay miss, ...).
class ReasonerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reasoner output that does not follow the "= A out of 10" contract.
class MalformedOutput : public ReasonerError {
 public:
  MalformedOutput(const std::string& reason, std::string text)
      : ReasonerError("malformed reasoner output (" + reason + "): " + text),
        text_(std::move(text)) {}

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

}  // namespace dnc

#endif  // DNC_ERRORS_H_
