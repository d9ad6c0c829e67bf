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

#include "psi/reflection.hpp"

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

struct HeaderPos {
  std::size_t line_start = std::string::npos;
  std::size_t content_start = std::string::npos;  // just past the colon

  bool found() const { return content_start != std::string::npos; }
};

/// Finds a "Header:" occurrence at a line start, skipping markdown
/// adornment (#, *, _, >, whitespace) before the word and between the word
/// and the colon.
HeaderPos find_header(const std::string& text, const std::string& header) {
  std::string haystack = lower_copy(text);
  std::string needle = lower_copy(header);
  std::size_t search_from = 0;
  while (search_from < haystack.size()) {
    std::size_t at = haystack.find(needle, search_from);
    if (at == std::string::npos) return {};

    // Walk back over adornment to the start of the line.
    std::size_t line_start = haystack.rfind('\n', at);
    line_start = (line_start == std::string::npos) ? 0 : line_start + 1;
    bool only_adornment = true;
    for (std::size_t i = line_start; i < at; ++i) {
      char c = haystack[i];
      if (c != '#' && c != '*' && c != '_' && c != '>' && c != ' ' &&
          c != '\t') {
        only_adornment = false;
        break;
      }
    }
    if (only_adornment) {
      std::size_t colon = at + needle.size();
      while (colon < haystack.size() &&
             (haystack[colon] == '*' || haystack[colon] == '_' ||
              haystack[colon] == ' ')) {
        ++colon;
      }
      if (colon < haystack.size() && haystack[colon] == ':') {
        return {line_start, colon + 1};
      }
    }
    search_from = at + needle.size();
  }
  return {};
}

bool is_bullet_line(const std::string& line, std::string* content) {
  std::string trimmed = trim_copy(line);
  if (trimmed.empty()) return false;
  // "- x", "* x", "• x"
  if (trimmed.rfind("- ", 0) == 0 || trimmed.rfind("* ", 0) == 0) {
    *content = trim_copy(trimmed.substr(2));
    return !content->empty();
  }
  if (trimmed.rfind("•", 0) == 0) {
    *content = trim_copy(trimmed.substr(3));
    return !content->empty();
  }
  // "1. x", "12) x"
  std::size_t i = 0;
  while (i < trimmed.size() &&
         std::isdigit(static_cast<unsigned char>(trimmed[i]))) {
    ++i;
  }
  if (i > 0 && i < trimmed.size() && (trimmed[i] == '.' || trimmed[i] == ')')) {
    *content = trim_copy(trimmed.substr(i + 1));
    return !content->empty();
  }
  return false;
}

std::string strip_label(const std::string& text, const std::string& label) {
  std::string trimmed = trim_copy(text);
  // Peel leading markdown adornment before comparing.
  std::size_t start = 0;
  while (start < trimmed.size() &&
         (trimmed[start] == '*' || trimmed[start] == '_' ||
          trimmed[start] == '#' || trimmed[start] == ' ')) {
    ++start;
  }
  std::string lowered = lower_copy(trimmed);
  std::string needle = lower_copy(label);
  if (lowered.compare(start, needle.size(), needle) == 0) {
    std::size_t after = start + needle.size();
    while (after < trimmed.size() &&
           (trimmed[after] == '*' || trimmed[after] == '_' ||
            trimmed[after] == ' ')) {
      ++after;
    }
    if (after < trimmed.size() && trimmed[after] == ':') {
      return trim_copy(trimmed.substr(after + 1));
    }
  }
  return trimmed;
}

}  // namespace

ReflectionResult parse_reflection(const std::string& text) {
  ReflectionResult result;

  HeaderPos insights = find_header(text, "Insights");
  if (!insights.found()) {
    throw Error(ErrorKind::Parse, "reflection response has no Insights header");
  }
  HeaderPos reasoning = find_header(text, "Reasoning");
  if (reasoning.found() && reasoning.content_start < insights.line_start) {
    result.reasoning = trim_copy(text.substr(
        reasoning.content_start, insights.line_start - reasoning.content_start));
  }

  std::istringstream lines(text.substr(insights.content_start));
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    std::string content;
    if (is_bullet_line(line, &content)) {
      result.insights.push_back(content);
    } else if (first && result.insights.empty()) {
      // An inline insight on the header line itself ("Insights: do X").
      std::string inline_text = trim_copy(line);
      bool has_word = std::any_of(inline_text.begin(), inline_text.end(),
                                  [](unsigned char c) { return std::isalnum(c); });
      if (has_word) result.insights.push_back(inline_text);
    }
    first = false;
  }

  if (result.insights.empty()) {
    throw Error(ErrorKind::Parse, "reflection response lists no insights");
  }
  return result;
}

std::vector<LowLevelPrinciple> reflect_low_level(
    LmGateway& gateway, const std::vector<TaskInstance>& subset_instances,
    const PromptTemplate& reflection_template, int subset_index,
    const ReflectionOptions& options) {
  if (subset_instances.empty()) {
    throw Error(ErrorKind::Precondition, "reflection over an empty subset");
  }
  std::string prompt = reflection_template.render(
      {{"INSTRUCTIONS", render_instruction_data(subset_instances)}});

  std::string base_id = "reflect-" + std::to_string(subset_index);
  std::string last_response;
  for (int ask = 0; ask < 2; ++ask) {
    ChatRequest request;
    request.role = Role::Reflector;
    request.messages = {{"user", prompt}};
    request.temperature = options.temperature;
    request.max_tokens = options.max_tokens;
    request.request_id = ask == 0 ? base_id : base_id + "-r" + std::to_string(ask);
    ChatResponse response = gateway.chat_complete(request);
    last_response = response.text;
    try {
      ReflectionResult parsed = parse_reflection(response.text);
      std::vector<LowLevelPrinciple> principles;
      principles.reserve(parsed.insights.size());
      for (const auto& insight : parsed.insights) {
        LowLevelPrinciple principle;
        principle.text = insight;
        principle.reasoning_excerpt = parsed.reasoning;
        principle.subset_index = subset_index;
        principles.push_back(std::move(principle));
      }
      return principles;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Parse) throw;
      // fall through to the single re-ask
    }
  }
  throw Error(ErrorKind::Reflection,
              "unparseable reflection for subset " +
                  std::to_string(subset_index) + " after re-ask; raw text: " +
                  last_response);
}

HighLevelPrinciple summarize_cluster(
    LmGateway& gateway, const std::vector<std::string>& member_texts,
    const PromptTemplate& summarization_template, int cluster_index,
    const SummarizationOptions& options) {
  if (member_texts.empty()) {
    throw Error(ErrorKind::Precondition, "summarizing an empty cluster");
  }
  std::string prompt = summarization_template.render(
      {{"low_level_principles", numbered_list(member_texts)}});

  ChatRequest request;
  request.role = Role::Reflector;
  request.messages = {{"user", prompt}};
  request.temperature = options.temperature;
  request.max_tokens = options.max_tokens;
  request.request_id = "summarize-" + std::to_string(cluster_index);
  ChatResponse response = gateway.chat_complete(request);

  std::string text = strip_label(response.text, "Principle");
  if (text.empty()) {
    throw Error(ErrorKind::Summarization,
                "empty summarization for cluster " +
                    std::to_string(cluster_index));
  }
  HighLevelPrinciple principle;
  principle.text = text;
  principle.cluster_index = cluster_index;
  return principle;
}

}  // namespace psi
