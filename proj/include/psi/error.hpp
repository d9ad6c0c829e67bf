// Copyright 2026 The PSI Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace psi {

/// Failure categories. The CLI maps these onto exit codes: configuration
/// and input problems exit 2, yield shortfalls exit 3, everything else 1.
enum class ErrorKind {
  Parse,         // malformed bytes (JSON, response grammar)
  Schema,        // well-formed but missing/invalid fields
  EmptyDataset,  // a dataset that must be nonempty is empty
  Integrity,     // internal consistency violated (counts, dimensions)
  Precondition,  // caller broke an operation precondition
  Transport,     // network-level failure, retryable
  Gateway,       // transport failed after all retries
  Config,        // endpoint/credential/flag problem, never retried
  Privacy,       // private knowledge about to leave through the wrong role
  Shortfall,     // pipeline could not reach the requested yield
  Fitting,       // mixture fit degenerated beyond recovery
  Render,        // prompt template could not be fully instantiated
  Reflection,    // reflector response unusable after re-ask
  Summarization, // summarizer returned nothing usable
  Stage,         // wrapper for errors attributed to a pipeline stage
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace psi
