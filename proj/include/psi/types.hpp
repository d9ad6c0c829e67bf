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

#include <cstddef>
#include <string>
#include <vector>

#include "psi/error.hpp"

namespace psi {

// All types in this header are immutable values after construction and are
// safe to share across threads.

/// Where a task instance came from.
enum class Origin { Seed, InitialExpansion, Generated };

const char* to_string(Origin origin);
Origin origin_from_string(const std::string& name);

/// Sentinel used by the prompt format for "this task needs no input".
/// Internally an empty input is always the empty string; the sentinel
/// re-appears only inside rendered prompts.
inline constexpr const char* kNoInputSentinel = "<noinput>";

/// One instruction-tuning record plus provenance.
struct TaskInstance {
  std::string instruction;
  std::string input;   // empty string is the canonical "no input"
  std::string output;
  Origin origin = Origin::Seed;
  std::string source_request_id;  // required when origin == Generated

  /// Throws Error(Schema) if any invariant is broken.
  void validate() const;
};

/// Removes the no-input sentinel and trims; idempotent.
std::string normalize_input(const std::string& raw);

std::string trim_copy(const std::string& text);

enum class DatasetLabel { Seed, Initial, Final };

const char* to_string(DatasetLabel label);
DatasetLabel label_from_string(const std::string& name);

/// Ordered collection of task instances with a pipeline-stage label.
struct Dataset {
  std::vector<TaskInstance> items;
  DatasetLabel label = DatasetLabel::Seed;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }

  /// Throws Error(Schema) on any item invariant or label violation.
  void validate() const;
};

/// A per-subset insight extracted by the reflector.
struct LowLevelPrinciple {
  std::string text;
  std::string reasoning_excerpt;
  int subset_index = 0;
  std::vector<double> embedding;  // empty until the embedder has run
};

/// Soft cluster over low-level principle indices. Overlap is allowed and
/// clusters jointly cover all principles.
struct PrincipleCluster {
  std::vector<std::size_t> member_indices;
  std::vector<double> centroid;  // in the reduced embedding space
};

/// One summarized guideline per cluster.
struct HighLevelPrinciple {
  std::string text;
  int cluster_index = 0;
};

/// The full principle state of a run: low-level texts, their clusters, and
/// the N high-level principles injected into generation prompts.
struct PrinciplePool {
  std::vector<LowLevelPrinciple> low_level;
  std::vector<PrincipleCluster> clusters;
  std::vector<HighLevelPrinciple> high_level;
  std::size_t n = 0;  // always equals |clusters| and |high_level|

  /// Throws Error(Integrity) if N disagrees with the list sizes, a member
  /// index is out of range, or coverage is broken.
  void validate() const;

  /// Pool with one principle removed and cluster indices re-packed.
  PrinciplePool without_principle(std::size_t index) const;
};

/// External knowledge passed to the generator and never to the reflector.
struct KnowledgeSnippet {
  std::string id;
  std::string body;
  std::vector<std::string> tags;
};

/// Thrown when a stage cannot reach its requested yield; carries whatever
/// was collected so the caller can persist the partial result.
class ShortfallError : public Error {
 public:
  ShortfallError(std::string message, Dataset partial, std::size_t requested)
      : Error(ErrorKind::Shortfall, std::move(message)),
        partial_(std::move(partial)),
        requested_(requested) {}

  const Dataset& partial() const { return partial_; }
  std::size_t achieved() const { return partial_.size(); }
  std::size_t requested() const { return requested_; }

 private:
  Dataset partial_;
  std::size_t requested_;
};

}  // namespace psi
