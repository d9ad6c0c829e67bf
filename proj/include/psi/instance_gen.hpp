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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "psi/gateway.hpp"
#include "psi/prompt_template.hpp"
#include "psi/types.hpp"

namespace psi {

/// Inputs of one generation request.
struct GenerationBatchSpec {
  const PrinciplePool* principles = nullptr;
  std::vector<KnowledgeSnippet> knowledge;
  int tasks_per_request = 20;
  double temperature = 0.7;
  std::vector<TaskInstance> in_context_examples;  // drawn from D_initial only
};

/// Table-style generation prompt: the template body with the high-level
/// principles numbered in, an optional "Reference material:" section when
/// knowledge is present, and the in-context examples appended as completed
/// task blocks. Pure function of its inputs.
std::string render_generation_prompt(const GenerationBatchSpec& spec,
                                     const PromptTemplate& tmpl);

struct ParsedBatch {
  std::vector<TaskInstance> tasks;
  struct Skip {
    std::size_t block_number;
    std::string reason;
  };
  std::vector<Skip> skips;
};

/// Extracts numbered Instruction/Input/Output blocks (case-insensitive,
/// markdown and "###" tolerant). Fewer blocks than requested is fine; a
/// malformed block is skipped with a reason. Zero parseable tasks throws
/// Error(Parse) carrying the raw text.
ParsedBatch parse_generated_tasks(const std::string& text,
                                  const std::string& source_request_id = "");

/// Pure accept/reject predicate with a label for the rejection log.
struct ValidationRule {
  std::string name;
  std::function<bool(const TaskInstance&)> accepts;
};

/// The stock rules: nonempty instruction and output, output within the
/// word budget, instruction at most two sentences, and no requests for
/// non-text abilities (draw/image/audio/wake/remind).
const std::vector<ValidationRule>& default_validation_rules();

struct ValidationOutcome {
  bool accepted = true;
  std::string reason;  // first failing rule when rejected
};

ValidationOutcome validate_instance(const TaskInstance& instance,
                                    const std::vector<ValidationRule>& rules =
                                        default_validation_rules());

/// ROUGE-L F1 over case-folded whitespace tokens; symmetric, 1 on equal
/// nonempty strings, 0 when the token sequences share no subsequence, and
/// 0 when both strings are empty.
double rouge_l_f1(const std::string& a, const std::string& b);

/// Order-preserving scan: a candidate is kept iff its instruction scores
/// below `threshold` against every already-kept and pool instruction.
std::vector<TaskInstance> dedup_filter(
    const std::vector<TaskInstance>& candidates,
    const std::vector<std::string>& accepted_pool_instructions,
    double threshold);

/// True when no instruction pair in the dataset reaches the threshold;
/// the post-hoc re-verification pass over emitted files.
bool verify_instruction_diversity(const Dataset& dataset, double threshold);

struct RejectionRecord {
  std::string request_id;
  std::size_t block_number = 0;
  std::string stage;  // "parse" | "validate" | "dedup"
  std::string reason;
  std::string excerpt;
};

std::string rejections_to_csv(const std::vector<RejectionRecord>& records);

struct GenerationConfig {
  std::size_t target_size = 20000;
  int tasks_per_request = 20;
  int in_context_examples = 3;
  double temperature = 0.7;
  double dedup_threshold = 0.7;
  int max_tokens = 2048;
  std::size_t max_requests = 0;  // 0 = 4x the minimum needed
};

struct RequestYield {
  std::string request_id;
  std::size_t parsed = 0;
  std::size_t validated = 0;
  std::size_t kept = 0;
};

struct GenerationStats {
  std::size_t requests_issued = 0;
  std::size_t parsed = 0;
  std::size_t validated = 0;
  std::size_t kept = 0;
  std::vector<RequestYield> per_request;
  std::vector<RejectionRecord> rejections;
};

/// The generation loop: issues prompts (concurrently, bounded by the
/// gateway) until target_size accepted-and-deduped instances are collected
/// or max_requests is exhausted, assembling results in request order then
/// block order. Throws ShortfallError carrying the partial dataset when
/// the target is unreachable.
Dataset generate_dataset(LmGateway& gateway, const PrinciplePool& pool,
                         const std::vector<KnowledgeSnippet>& knowledge,
                         const Dataset& initial, const GenerationConfig& config,
                         const PromptTemplate& tmpl, GenerationStats* stats);

}  // namespace psi
