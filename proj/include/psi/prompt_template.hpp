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

#include <map>
#include <string>
#include <vector>

#include "psi/types.hpp"

namespace psi {

/// The four prompt roles of the pipeline: seed expansion, low-level
/// reflection, cluster summarization, and instance generation.
enum class TemplateKind { Expansion, Reflection, Summarization, Generation };

const char* to_string(TemplateKind kind);

/// Text template with {PLACEHOLDER} slots. Allowed placeholders:
/// INSTRUCTIONS, low_level_principles, PRINCIPLES, KNOWLEDGE, N_TASKS.
struct PromptTemplate {
  TemplateKind kind = TemplateKind::Generation;
  std::string body;

  /// Throws Error(Schema) when the body carries an unknown placeholder.
  void validate() const;

  /// Substitutes bindings; throws Error(Render) if any placeholder is
  /// left unresolved. Rendering is a pure function of its arguments.
  std::string render(const std::map<std::string, std::string>& bindings) const;

  static PromptTemplate builtin(TemplateKind kind);
  static PromptTemplate from_file(TemplateKind kind, const std::string& path);
};

/// Placeholders a template body may use.
std::vector<std::string> allowed_placeholders();

/// "### Task k" block for one instance; empty input renders the
/// no-input sentinel, which exists only inside prompts.
std::string render_task_block(const TaskInstance& instance, std::size_t number);

/// Instances serialized as consecutive task blocks, numbered from 1.
std::string render_instruction_data(const std::vector<TaskInstance>& instances);

/// "1. first\n2. second\n..." over the given lines.
std::string numbered_list(const std::vector<std::string>& lines);

/// Completed "k. Instruction/Input/Output" blocks used as in-context
/// examples after the "List of N tasks:" line.
std::string render_example_blocks(const std::vector<TaskInstance>& instances,
                                  std::size_t first_number = 1);

/// "Reference material:" section for knowledge snippets.
std::string render_knowledge_section(const std::vector<KnowledgeSnippet>& snippets);

}  // namespace psi
