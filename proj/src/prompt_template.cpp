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

#include "psi/prompt_template.hpp"

#include <algorithm>
#include <cctype>

#include "psi/dataset_io.hpp"

namespace psi {

namespace {

// Shared requirement list of the generation-style prompts. The numbering
// and wording are kept exactly as shipped; the duplicated 2/3 items are
// intentional.
constexpr const char* kGenerationRequirements =
    "Here are the requirements:\n"
    "1. Try not to repeat the verb for each instruction to maximize diversity.\n"
    "2. The language used for the instruction also should be diverse. For "
    "example, you should combine questions with imperative instrucitons.\n"
    "3. The type of instructions should be diverse. The list should include "
    "diverse types of tasks like open-ended generation, classification, "
    "editing, etc.\n"
    "2. A GPT language model should be able to complete the instruction. For "
    "example, do not ask the assistant to create any visual or audio output. "
    "For another example, do not ask the assistant to wake you up at 5pm or "
    "set a reminder because it cannot perform any action.\n"
    "3. The instructions should be in English.\n"
    "4. The instructions should be 1 to 2 sentences long. Either an "
    "imperative sentence or a question is permitted.\n"
    "5. You should generate an appropriate input to the instruction. The "
    "input field should contain a specific example provided for the "
    "instruction. It should involve realistic data and should not contain "
    "simple placeholders. The input should provide substantial content to "
    "make the instruction challenging but should ideally not exceed 100 "
    "words.\n"
    "6. Not all instructions require input. For example, when a instruction "
    "asks about some general information, \"what is the highest peak in the "
    "world\", it is not necssary to provide a specific context. In this "
    "case, we simply put \"<noinput>\" in the input field.\n"
    "7. The output should be an appropriate response to the instruction and "
    "the input. Make sure the output is less than 100 words.\n";

std::string generation_body(bool with_principles) {
  std::string body =
      "You are asked to come up with a set of {N_TASKS} diverse task "
      "instructions. These task instructions will be given to a GPT model "
      "and we will evaluate the GPT model for completing the "
      "instructions.\n\n";
  body += kGenerationRequirements;
  if (with_principles) {
    body +=
        "\nThe following insights and guidelines may improve responses:\n"
        "{PRINCIPLES}\n";
  }
  body += "\nList of {N_TASKS} tasks:\n";
  return body;
}

constexpr const char* kReflectionBody =
    "The data instructions: {INSTRUCTIONS}.\n"
    "\n"
    "You are an AI assistant. Conduct a thorough analysis of the given "
    "instructions output pairs. Identify the points that can be improved. "
    "Hallucinations, empty input and output, tasks that the language model "
    "cannot complete, etc. are all considered bad instructions. Provide "
    "clear insights, principles, or guidelines that can be derived from "
    "this analysis to improve future instructions and outputs. We are not "
    "focused on this one data point, but rather on the general principle.\n"
    "\n"
    "Your output should follow the following format.\n"
    "\n"
    "Reasoning: <discuss how the instruction generator could be improved>\n"
    "\n"
    "Insights: <what principle should be looked at carefully to improve the "
    "instructions outputs quality in the future, given in points>\n";

constexpr const char* kSummarizationBody =
    "Low-level principles: {low_level_principles}\n"
    "\n"
    "Create a high level and insightful principle to improve future "
    "responses based on the principles above. Focus on capturing the "
    "essence of the feedback while eliminating redundancies. Leave specific "
    "details in place.\n"
    "\n"
    "Principle:\n";

bool is_placeholder_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// Collects {NAME} spans; names must be nonempty runs of [A-Za-z0-9_].
std::vector<std::string> find_placeholders(const std::string& body) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < body.size() && is_placeholder_char(body[j])) ++j;
    if (j > i + 1 && j < body.size() && body[j] == '}') {
      names.push_back(body.substr(i + 1, j - i - 1));
      i = j;
    }
  }
  return names;
}

}  // namespace

const char* to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::Expansion: return "expansion";
    case TemplateKind::Reflection: return "reflection";
    case TemplateKind::Summarization: return "summarization";
    case TemplateKind::Generation: return "generation";
  }
  return "generation";
}

std::vector<std::string> allowed_placeholders() {
  return {"INSTRUCTIONS", "low_level_principles", "PRINCIPLES", "KNOWLEDGE",
          "N_TASKS"};
}

void PromptTemplate::validate() const {
  auto allowed = allowed_placeholders();
  for (const auto& name : find_placeholders(body)) {
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      throw Error(ErrorKind::Schema,
                  "template uses unknown placeholder {" + name + "}");
    }
  }
}

std::string PromptTemplate::render(
    const std::map<std::string, std::string>& bindings) const {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '{') {
      std::size_t j = i + 1;
      while (j < body.size() && is_placeholder_char(body[j])) ++j;
      if (j > i + 1 && j < body.size() && body[j] == '}') {
        std::string name = body.substr(i + 1, j - i - 1);
        auto it = bindings.find(name);
        if (it == bindings.end()) {
          throw Error(ErrorKind::Render,
                      "unresolved placeholder {" + name + "} in " +
                          std::string(to_string(kind)) + " template");
        }
        out += it->second;
        i = j;
        continue;
      }
    }
    out += body[i];
  }
  return out;
}

PromptTemplate PromptTemplate::builtin(TemplateKind kind) {
  PromptTemplate tmpl;
  tmpl.kind = kind;
  switch (kind) {
    case TemplateKind::Expansion:
      tmpl.body = generation_body(/*with_principles=*/false);
      break;
    case TemplateKind::Reflection:
      tmpl.body = kReflectionBody;
      break;
    case TemplateKind::Summarization:
      tmpl.body = kSummarizationBody;
      break;
    case TemplateKind::Generation:
      tmpl.body = generation_body(/*with_principles=*/true);
      break;
  }
  return tmpl;
}

PromptTemplate PromptTemplate::from_file(TemplateKind kind,
                                         const std::string& path) {
  PromptTemplate tmpl;
  tmpl.kind = kind;
  tmpl.body = read_file(path);
  tmpl.validate();
  return tmpl;
}

std::string render_task_block(const TaskInstance& instance, std::size_t number) {
  std::string block = "### Task " + std::to_string(number) + "\n";
  block += "Instruction: " + instance.instruction + "\n";
  block += "Input: " +
           (instance.input.empty() ? std::string(kNoInputSentinel)
                                   : instance.input) +
           "\n";
  block += "Output: " + instance.output + "\n";
  return block;
}

std::string render_instruction_data(const std::vector<TaskInstance>& instances) {
  std::string out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (i > 0) out += "\n";
    out += render_task_block(instances[i], i + 1);
  }
  return out;
}

std::string numbered_list(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += std::to_string(i + 1) + ". " + lines[i];
    if (i + 1 < lines.size()) out += "\n";
  }
  return out;
}

std::string render_example_blocks(const std::vector<TaskInstance>& instances,
                                  std::size_t first_number) {
  std::string out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const TaskInstance& instance = instances[i];
    out += std::to_string(first_number + i) + ". Instruction: " +
           instance.instruction + "\n";
    out += "Input: " +
           (instance.input.empty() ? std::string(kNoInputSentinel)
                                   : instance.input) +
           "\n";
    out += "Output: " + instance.output + "\n\n";
  }
  return out;
}

std::string render_knowledge_section(
    const std::vector<KnowledgeSnippet>& snippets) {
  if (snippets.empty()) return "";
  std::string out = "Reference material:\n";
  for (const auto& snippet : snippets) {
    out += "- " + snippet.body + "\n";
  }
  return out;
}

}  // namespace psi
