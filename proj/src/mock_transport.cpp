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

#include "psi/mock_transport.hpp"

#include <cctype>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "psi/rng.hpp"

namespace psi {

namespace {

using nlohmann::json;

MockChatEntry entry_from_json(const json& node) {
  MockChatEntry entry;
  entry.text = node.value("text", std::string{});
  entry.prompt_tokens = node.value("prompt_tokens", std::uint64_t{0});
  entry.completion_tokens = node.value("completion_tokens", std::uint64_t{0});
  entry.fail_times = node.value("fail_times", 0);
  entry.status = node.value("status", 200);
  std::string reason = node.value("finish_reason", std::string("stop"));
  if (reason == "length") entry.finish_reason = FinishReason::Length;
  else if (reason == "error") entry.finish_reason = FinishReason::Error;
  return entry;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

bool parse_index(const std::string& request_id, std::uint64_t* index) {
  auto dash = request_id.find('-');
  if (dash == std::string::npos || dash + 1 >= request_id.size()) return false;
  std::size_t pos = dash + 1;
  if (!std::isdigit(static_cast<unsigned char>(request_id[pos]))) return false;
  std::uint64_t value = 0;
  while (pos < request_id.size() &&
         std::isdigit(static_cast<unsigned char>(request_id[pos]))) {
    value = value * 10 + (request_id[pos] - '0');
    ++pos;
  }
  *index = value;
  return true;
}

}  // namespace

std::string request_phase(const std::string& request_id) {
  auto dash = request_id.find('-');
  if (dash == std::string::npos) return request_id;
  return request_id.substr(0, dash);
}

std::unique_ptr<MockTransport> MockTransport::from_script(
    std::string_view script_json) {
  json doc;
  try {
    doc = json::parse(script_json);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config,
                std::string("mock script parse error: ") + e.what());
  }
  auto mock = std::make_unique<MockTransport>();
  if (doc.contains("chat")) {
    for (const auto& [phase, list] : doc.at("chat").items()) {
      std::vector<MockChatEntry> entries;
      for (const auto& node : list) entries.push_back(entry_from_json(node));
      mock->add_chat_entries(phase, std::move(entries));
    }
  }
  if (doc.contains("by_id")) {
    for (const auto& [id, node] : doc.at("by_id").items()) {
      mock->add_by_id(id, entry_from_json(node));
    }
  }
  if (doc.contains("embeddings")) {
    const auto& emb = doc.at("embeddings");
    mock->embed_dim_ = emb.value("dim", std::size_t{8});
    mock->embed_jitter_ = emb.value("jitter", 0.0);
    if (emb.contains("rules")) {
      for (const auto& node : emb.at("rules")) {
        EmbedRule rule;
        rule.contains = node.at("contains").get<std::string>();
        rule.vector = node.at("vector").get<std::vector<double>>();
        mock->embed_rules_.push_back(std::move(rule));
      }
    }
  }
  return mock;
}

void MockTransport::add_chat_entries(const std::string& phase,
                                     std::vector<MockChatEntry> entries) {
  chat_[phase] = std::move(entries);
}

void MockTransport::add_by_id(const std::string& request_id,
                              MockChatEntry entry) {
  by_id_[request_id] = std::move(entry);
}

const MockChatEntry& MockTransport::select_entry(const std::string& request_id) {
  auto exact = by_id_.find(request_id);
  if (exact != by_id_.end()) return exact->second;

  std::string phase = request_phase(request_id);
  auto list = chat_.find(phase);
  if (list == chat_.end() || list->second.empty()) {
    throw Error(ErrorKind::Config,
                "mock script has no entries for phase \"" + phase + "\"");
  }
  std::uint64_t index = 0;
  if (!parse_index(request_id, &index)) {
    index = fallback_counters_[phase]++;
  }
  return list->second[index % list->second.size()];
}

ChatResponse MockTransport::chat_once(const ChatRequest& request) {
  std::lock_guard<std::mutex> lock(mutex_);
  const MockChatEntry& entry = select_entry(request.request_id);

  Call call;
  call.phase = request_phase(request.request_id);
  call.request_id = request.request_id;
  for (const auto& message : request.messages) {
    call.body += message.text;
    call.body += '\n';
  }
  call.attempt = ++attempts_[request.request_id];

  if (entry.status >= 400 && entry.status < 500) {
    call.ok = false;
    call.response = "HTTP " + std::to_string(entry.status);
    calls_.push_back(std::move(call));
    throw Error(ErrorKind::Config,
                "mock endpoint returned HTTP " + std::to_string(entry.status));
  }
  if (entry.status >= 500 || call.attempt <= entry.fail_times) {
    call.ok = false;
    call.response = "transport failure";
    calls_.push_back(std::move(call));
    throw Error(ErrorKind::Transport, "scripted transport failure for " +
                                          request.request_id);
  }

  ChatResponse response;
  response.text = entry.text;
  response.usage.prompt_tokens = entry.prompt_tokens;
  response.usage.completion_tokens = entry.completion_tokens;
  response.finish_reason = entry.finish_reason;

  call.response = entry.text;
  calls_.push_back(std::move(call));
  return response;
}

std::vector<double> MockTransport::embedding_for(const std::string& text) const {
  std::vector<double> values;
  for (const auto& rule : embed_rules_) {
    if (text.find(rule.contains) != std::string::npos) {
      values = rule.vector;
      break;
    }
  }
  if (values.empty()) {
    // Deterministic pseudo-embedding from the text hash.
    values.resize(embed_dim_);
    std::uint64_t h = fnv1a(text);
    for (std::size_t i = 0; i < embed_dim_; ++i) {
      std::uint64_t bits = mix64(h + i);
      values[i] = static_cast<double>(bits >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }
  }
  values.resize(embed_dim_, 0.0);
  if (embed_jitter_ > 0.0) {
    // Gaussian jitter (Box-Muller over hash-derived uniforms) so jittered
    // groups look like what a mixture model expects.
    std::uint64_t h = fnv1a(text) ^ 0xabcdef12345678ull;
    for (std::size_t i = 0; i < values.size(); ++i) {
      double u1 = (static_cast<double>(mix64(h + 2 * i) >> 11) + 1.0) * 0x1.0p-53;
      double u2 = static_cast<double>(mix64(h + 2 * i + 1) >> 11) * 0x1.0p-53;
      double z = std::sqrt(-2.0 * std::log(u1)) *
                 std::cos(2.0 * 3.14159265358979323846 * u2);
      values[i] += z * embed_jitter_;
    }
  }
  return values;
}

EmbedResponse MockTransport::embed_once(const EmbedRequest& request) {
  std::lock_guard<std::mutex> lock(mutex_);
  EmbedResponse response;
  std::uint64_t chars = 0;
  for (const auto& text : request.texts) {
    response.vectors.push_back(embedding_for(text));
    chars += text.size();
  }
  response.usage.prompt_tokens = (chars + 3) / 4;  // rough char/4 heuristic

  Call call;
  call.phase = request_phase(request.request_id);
  call.request_id = request.request_id;
  for (const auto& text : request.texts) {
    call.body += text;
    call.body += '\n';
  }
  call.attempt = ++attempts_[request.request_id];
  call.response = "[" + std::to_string(response.vectors.size()) + " vectors]";
  calls_.push_back(std::move(call));
  return response;
}

std::vector<MockTransport::Call> MockTransport::calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return calls_;
}

std::size_t MockTransport::distinct_requests_with_prefix(
    const std::string& prefix) const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::set<std::string> ids;
  for (const auto& call : calls_) {
    if (call.ok && call.request_id.rfind(prefix, 0) == 0) {
      ids.insert(call.request_id);
    }
  }
  return ids.size();
}

}  // namespace psi
