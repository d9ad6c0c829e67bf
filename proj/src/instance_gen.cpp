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

#include "psi/instance_gen.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace psi {

namespace {

std::string lower_copy(const std::string& text) {
  std::string out = text;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::vector<std::string> tokenize_folded(const std::string& text) {
  std::istringstream stream(lower_copy(text));
  std::vector<std::string> tokens;
  std::string token;
  while (stream >> token) tokens.push_back(token);
  return tokens;
}

std::size_t word_count(const std::string& text) {
  std::istringstream stream(text);
  std::string token;
  std::size_t count = 0;
  while (stream >> token) ++count;
  return count;
}

/// Counts maximal runs of terminal punctuation; "Hi!? Ok." has two.
std::size_t sentence_terminator_runs(const std::string& text) {
  std::size_t runs = 0;
  bool in_run = false;
  for (char c : text) {
    const bool terminal = c == '.' || c == '!' || c == '?';
    if (terminal && !in_run) ++runs;
    in_run = terminal;
  }
  return runs;
}

// Task shapes the generator cannot perform as text (drawing, audio,
// alarms); matched as case-insensitive token prefixes so "reminder" and
// "images" also hit.
const char* kNonTextPrefixes[] = {"draw", "image", "audio", "wake", "remind"};

bool demands_non_text_ability(const std::string& instruction) {
  for (const auto& token : tokenize_folded(instruction)) {
    for (const char* prefix : kNonTextPrefixes) {
      if (token.rfind(prefix, 0) == 0) return true;
    }
  }
  return false;
}

struct HeaderMatch {
  enum Kind { None, Instruction, Input, Output } kind = None;
  std::string remainder;  // text after the colon
  bool numbered = false;
};

HeaderMatch match_header(const std::string& line) {
  HeaderMatch match;
  std::size_t i = 0;
  const std::size_t size = line.size();
  auto skip_adornment = [&]() {
    while (i < size && (line[i] == '#' || line[i] == '*' || line[i] == '>' ||
                        line[i] == ' ' || line[i] == '\t')) {
      ++i;
    }
  };
  skip_adornment();
  // Optional "12." / "12)" numbering, or a "Task 12:" label.
  std::size_t digits = i;
  while (digits < size && std::isdigit(static_cast<unsigned char>(line[digits]))) {
    ++digits;
  }
  if (digits > i && digits < size && (line[digits] == '.' || line[digits] == ')')) {
    match.numbered = true;
    i = digits + 1;
    skip_adornment();
  }

  static const struct {
    const char* word;
    HeaderMatch::Kind kind;
  } kHeaders[] = {{"instruction", HeaderMatch::Instruction},
                  {"input", HeaderMatch::Input},
                  {"output", HeaderMatch::Output}};
  std::string lowered = lower_copy(line);
  for (const auto& header : kHeaders) {
    std::size_t len = std::char_traits<char>::length(header.word);
    if (lowered.compare(i, len, header.word) != 0) continue;
    std::size_t after = i + len;
    while (after < size && (line[after] == '*' || line[after] == '_' ||
                            line[after] == ' ')) {
      ++after;
    }
    if (after < size && line[after] == ':') {
      match.kind = header.kind;
      std::size_t content = after + 1;
      while (content < size && (line[content] == '*' || line[content] == '_' ||
                                line[content] == ' ' || line[content] == '\t')) {
        ++content;
      }
      match.remainder = trim_copy(line.substr(content));
      return match;
    }
  }
  return match;
}

struct RawBlock {
  std::string instruction;
  std::string input;
  std::string output;
  bool saw_instruction = false;
  bool saw_output = false;
};

void append_line(std::string* field, const std::string& line) {
  if (!field->empty()) *field += '\n';
  *field += line;
}

}  // namespace

std::string render_generation_prompt(const GenerationBatchSpec& spec,
                                     const PromptTemplate& tmpl) {
  if (spec.principles == nullptr || spec.principles->n < 1) {
    throw Error(ErrorKind::Precondition,
                "generation needs a pool with at least one principle");
  }
  std::vector<std::string> principle_texts;
  principle_texts.reserve(spec.principles->high_level.size());
  for (const auto& principle : spec.principles->high_level) {
    principle_texts.push_back(principle.text);
  }

  const bool template_has_knowledge_slot =
      tmpl.body.find("{KNOWLEDGE}") != std::string::npos;
  std::map<std::string, std::string> bindings = {
      {"PRINCIPLES", numbered_list(principle_texts)},
      {"N_TASKS", std::to_string(spec.tasks_per_request)},
  };
  if (template_has_knowledge_slot) {
    bindings["KNOWLEDGE"] = render_knowledge_section(spec.knowledge);
  }
  std::string prompt = tmpl.render(bindings);

  if (!spec.knowledge.empty() && !template_has_knowledge_slot) {
    // Slot the reference material in ahead of the final task-list cue.
    const std::string section = render_knowledge_section(spec.knowledge);
    std::size_t at = prompt.rfind("List of ");
    if (at != std::string::npos) {
      prompt.insert(at, section + "\n");
    } else {
      prompt += "\n" + section;
    }
  }

  if (!spec.in_context_examples.empty()) {
    prompt += render_example_blocks(spec.in_context_examples);
  }
  return prompt;
}

ParsedBatch parse_generated_tasks(const std::string& text,
                                  const std::string& source_request_id) {
  ParsedBatch batch;
  std::vector<RawBlock> blocks;
  RawBlock current;
  enum Field { NoField, InInstruction, InInput, InOutput } field = NoField;

  auto flush = [&]() {
    if (current.saw_instruction || current.saw_output) {
      blocks.push_back(current);
    }
    current = RawBlock{};
    field = NoField;
  };

  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    HeaderMatch match = match_header(line);
    switch (match.kind) {
      case HeaderMatch::Instruction:
        if (current.saw_instruction) flush();
        current.saw_instruction = true;
        current.instruction = match.remainder;
        field = InInstruction;
        break;
      case HeaderMatch::Input:
        current.input = match.remainder;
        field = InInput;
        break;
      case HeaderMatch::Output:
        current.saw_output = true;
        current.output = match.remainder;
        field = InOutput;
        break;
      case HeaderMatch::None:
        switch (field) {
          case InInstruction: append_line(&current.instruction, line); break;
          case InInput: append_line(&current.input, line); break;
          case InOutput: append_line(&current.output, line); break;
          case NoField: break;  // preamble chatter
        }
        break;
    }
  }
  flush();

  std::size_t block_number = 0;
  for (const auto& block : blocks) {
    ++block_number;
    if (!block.saw_instruction || trim_copy(block.instruction).empty()) {
      batch.skips.push_back({block_number, "missing_instruction"});
      continue;
    }
    if (!block.saw_output) {
      batch.skips.push_back({block_number, "missing_output"});
      continue;
    }
    TaskInstance instance;
    instance.instruction = trim_copy(block.instruction);
    instance.input = normalize_input(block.input);
    instance.output = trim_copy(block.output);
    instance.origin = Origin::Generated;
    instance.source_request_id =
        source_request_id.empty() ? "unattributed" : source_request_id;
    batch.tasks.push_back(std::move(instance));
  }

  if (batch.tasks.empty()) {
    throw Error(ErrorKind::Parse,
                "no parseable tasks in response; raw text: " + text);
  }
  return batch;
}

const std::vector<ValidationRule>& default_validation_rules() {
  static const std::vector<ValidationRule> rules = {
      {"empty_instruction",
       [](const TaskInstance& t) { return !trim_copy(t.instruction).empty(); }},
      {"empty_output",
       [](const TaskInstance& t) { return !trim_copy(t.output).empty(); }},
      // The prompt asks for under 100 words; hard-rejecting there starves
      // multi-step answers, so the gate sits at 150.
      {"output_too_long",
       [](const TaskInstance& t) { return word_count(t.output) <= 150; }},
      {"instruction_too_long",
       [](const TaskInstance& t) {
         return sentence_terminator_runs(t.instruction) <= 2;
       }},
      {"non_text_capability",
       [](const TaskInstance& t) {
         return !demands_non_text_ability(t.instruction);
       }},
  };
  return rules;
}

ValidationOutcome validate_instance(const TaskInstance& instance,
                                    const std::vector<ValidationRule>& rules) {
  for (const auto& rule : rules) {
    if (!rule.accepts(instance)) {
      return {false, rule.name};
    }
  }
  return {true, ""};
}

double rouge_l_f1(const std::string& a, const std::string& b) {
  const std::vector<std::string> ta = tokenize_folded(a);
  const std::vector<std::string> tb = tokenize_folded(b);
  if (ta.empty() || tb.empty()) return 0.0;

  // LCS length via the classic two-row DP.
  std::vector<std::size_t> previous(tb.size() + 1, 0);
  std::vector<std::size_t> current(tb.size() + 1, 0);
  for (std::size_t i = 1; i <= ta.size(); ++i) {
    for (std::size_t j = 1; j <= tb.size(); ++j) {
      if (ta[i - 1] == tb[j - 1]) {
        current[j] = previous[j - 1] + 1;
      } else {
        current[j] = std::max(previous[j], current[j - 1]);
      }
    }
    std::swap(previous, current);
  }
  const double lcs = static_cast<double>(previous[tb.size()]);
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(ta.size());
  const double recall = lcs / static_cast<double>(tb.size());
  return 2.0 * precision * recall / (precision + recall);
}

std::vector<TaskInstance> dedup_filter(
    const std::vector<TaskInstance>& candidates,
    const std::vector<std::string>& accepted_pool_instructions,
    double threshold) {
  if (threshold <= 0.0 || threshold > 1.0) {
    throw Error(ErrorKind::Precondition, "dedup threshold must be in (0, 1]");
  }
  std::vector<TaskInstance> kept;
  std::vector<std::string> seen = accepted_pool_instructions;
  for (const auto& candidate : candidates) {
    bool duplicate = false;
    for (const auto& existing : seen) {
      if (rouge_l_f1(candidate.instruction, existing) >= threshold) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      seen.push_back(candidate.instruction);
      kept.push_back(candidate);
    }
  }
  return kept;
}

bool verify_instruction_diversity(const Dataset& dataset, double threshold) {
  for (std::size_t i = 0; i < dataset.items.size(); ++i) {
    for (std::size_t j = i + 1; j < dataset.items.size(); ++j) {
      if (rouge_l_f1(dataset.items[i].instruction,
                     dataset.items[j].instruction) >= threshold) {
        return false;
      }
    }
  }
  return true;
}

std::string rejections_to_csv(const std::vector<RejectionRecord>& records) {
  std::string out = "request_id,block,stage,reason,excerpt\n";
  for (const auto& record : records) {
    std::string excerpt = record.excerpt.substr(0, 60);
    std::replace(excerpt.begin(), excerpt.end(), ',', ';');
    std::replace(excerpt.begin(), excerpt.end(), '\n', ' ');
    out += record.request_id + ',' + std::to_string(record.block_number) + ',' +
           record.stage + ',' + record.reason + ',' + excerpt + '\n';
  }
  return out;
}

Dataset generate_dataset(LmGateway& gateway, const PrinciplePool& pool,
                         const std::vector<KnowledgeSnippet>& knowledge,
                         const Dataset& initial, const GenerationConfig& config,
                         const PromptTemplate& tmpl, GenerationStats* stats) {
  pool.validate();
  if (config.target_size == 0) {
    throw Error(ErrorKind::Precondition, "target size must be positive");
  }

  const std::size_t per_request =
      static_cast<std::size_t>(std::max(config.tasks_per_request, 1));
  std::size_t max_requests = config.max_requests;
  if (max_requests == 0) {
    max_requests = 4 * ((config.target_size + per_request - 1) / per_request);
  }

  GenerationStats local_stats;
  GenerationStats* out_stats = stats != nullptr ? stats : &local_stats;

  Dataset result;
  result.label = DatasetLabel::Final;
  std::vector<std::string> kept_instructions;

  auto examples_for = [&](std::size_t request_index) {
    std::vector<TaskInstance> examples;
    if (initial.empty() || config.in_context_examples <= 0) return examples;
    // Round-robin rotation over D_initial keyed by request index.
    for (int j = 0; j < config.in_context_examples; ++j) {
      std::size_t at = (request_index *
                            static_cast<std::size_t>(config.in_context_examples) +
                        static_cast<std::size_t>(j)) %
                       initial.size();
      examples.push_back(initial.items[at]);
    }
    return examples;
  };

  const std::size_t wave_width =
      static_cast<std::size_t>(std::max(gateway.parallelism(), 1));
  std::size_t next_request = 0;

  while (result.size() < config.target_size && next_request < max_requests) {
    // Optimistic sizing: assume full yield so the request count stays
    // minimal when every batch delivers.
    const std::size_t remaining = config.target_size - result.size();
    const std::size_t optimistic = (remaining + per_request - 1) / per_request;
    const std::size_t wave_size = std::min(
        {wave_width, optimistic, max_requests - next_request});
    const std::size_t wave_end = next_request + wave_size;

    struct Outcome {
      std::string request_id;
      std::string response_text;
      bool failed_parse = false;
      ParsedBatch batch;
    };
    std::vector<Outcome> outcomes(wave_size);

    parallel_for_ordered(wave_size, gateway.parallelism(), [&](std::size_t w) {
      const std::size_t request_index = next_request + w;
      GenerationBatchSpec spec;
      spec.principles = &pool;
      spec.knowledge = knowledge;
      spec.tasks_per_request = config.tasks_per_request;
      spec.temperature = config.temperature;
      spec.in_context_examples = examples_for(request_index);

      ChatRequest request;
      request.role = Role::Generator;
      request.messages = {{"user", render_generation_prompt(spec, tmpl)}};
      request.temperature = config.temperature;
      request.max_tokens = config.max_tokens;
      request.request_id = "gen-" + std::to_string(request_index);

      Outcome& outcome = outcomes[w];
      outcome.request_id = request.request_id;
      ChatResponse response = gateway.chat_complete(request);
      outcome.response_text = response.text;
      try {
        outcome.batch =
            parse_generated_tasks(response.text, request.request_id);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Parse) throw;
        outcome.failed_parse = true;
      }
    });

    // Single-threaded deterministic reduce in request-index order.
    for (std::size_t w = 0; w < wave_size; ++w) {
      Outcome& outcome = outcomes[w];
      ++out_stats->requests_issued;
      RequestYield yield;
      yield.request_id = outcome.request_id;

      if (outcome.failed_parse) {
        out_stats->rejections.push_back({outcome.request_id, 0, "parse",
                                         "no_parseable_tasks",
                                         outcome.response_text});
        out_stats->per_request.push_back(yield);
        continue;
      }
      yield.parsed = outcome.batch.tasks.size();
      out_stats->parsed += outcome.batch.tasks.size();
      for (const auto& skip : outcome.batch.skips) {
        out_stats->rejections.push_back(
            {outcome.request_id, skip.block_number, "parse", skip.reason, ""});
      }

      std::vector<TaskInstance> valid;
      std::size_t block = 0;
      for (auto& task : outcome.batch.tasks) {
        ++block;
        ValidationOutcome verdict = validate_instance(task);
        if (!verdict.accepted) {
          out_stats->rejections.push_back({outcome.request_id, block,
                                           "validate", verdict.reason,
                                           task.instruction});
          continue;
        }
        valid.push_back(std::move(task));
      }
      yield.validated = valid.size();
      out_stats->validated += valid.size();

      std::vector<TaskInstance> kept =
          dedup_filter(valid, kept_instructions, config.dedup_threshold);
      // Log what dedup dropped.
      std::size_t kept_at = 0;
      for (const auto& task : valid) {
        if (kept_at < kept.size() &&
            kept[kept_at].instruction == task.instruction) {
          ++kept_at;
          continue;
        }
        out_stats->rejections.push_back(
            {outcome.request_id, 0, "dedup", "near_duplicate", task.instruction});
      }

      for (auto& task : kept) {
        if (result.size() >= config.target_size) break;
        kept_instructions.push_back(task.instruction);
        result.items.push_back(std::move(task));
        ++yield.kept;
      }
      out_stats->kept += yield.kept;
      out_stats->per_request.push_back(yield);
    }
    next_request = wave_end;
  }

  if (result.size() < config.target_size) {
    throw ShortfallError(
        "generation yielded " + std::to_string(result.size()) + " of " +
            std::to_string(config.target_size) + " instances after " +
            std::to_string(out_stats->requests_issued) + " requests",
        std::move(result), config.target_size);
  }
  return result;
}

}  // namespace psi
