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

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "psi/gateway.hpp"

namespace psi {

/// One scripted chat reply.
struct MockChatEntry {
  std::string text;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  FinishReason finish_reason = FinishReason::Stop;
  int fail_times = 0;  // transient transport failures before succeeding
  int status = 200;    // 4xx -> config error, 5xx -> transport error
};

/// Deterministic scripted transport for offline runs and tests.
///
/// Replies are selected by the structured request id "<phase>-<index>":
/// the reply is chat[phase][index % size], so a response is a pure function
/// of the request id and runs are bit-identical no matter how requests
/// interleave across threads. Exact-id overrides take precedence.
///
/// Embeddings are substring rules over the input text with a hash-derived
/// deterministic fallback, optionally jittered per text.
class MockTransport : public Transport {
 public:
  struct EmbedRule {
    std::string contains;
    std::vector<double> vector;
  };

  struct Call {
    std::string phase;
    std::string request_id;
    std::string body;  // concatenated message texts / embedding inputs
    int attempt = 1;
    bool ok = true;
    std::string response;
  };

  MockTransport() = default;

  /// Parses the --mock script JSON (see README for the schema).
  static std::unique_ptr<MockTransport> from_script(std::string_view script_json);

  void add_chat_entries(const std::string& phase,
                        std::vector<MockChatEntry> entries);
  void add_by_id(const std::string& request_id, MockChatEntry entry);
  void set_embedding_dim(std::size_t dim) { embed_dim_ = dim; }
  void set_embedding_jitter(double jitter) { embed_jitter_ = jitter; }
  void add_embed_rule(EmbedRule rule) { embed_rules_.push_back(std::move(rule)); }

  ChatResponse chat_once(const ChatRequest& request) override;
  EmbedResponse embed_once(const EmbedRequest& request) override;

  /// Full attempt-level call log, in arrival order.
  std::vector<Call> calls() const;

  /// Number of distinct succeeded requests whose id starts with `prefix`.
  std::size_t distinct_requests_with_prefix(const std::string& prefix) const;

 private:
  const MockChatEntry& select_entry(const std::string& request_id);
  std::vector<double> embedding_for(const std::string& text) const;

  std::map<std::string, std::vector<MockChatEntry>> chat_;
  std::map<std::string, MockChatEntry> by_id_;
  std::size_t embed_dim_ = 8;
  double embed_jitter_ = 0.0;
  std::vector<EmbedRule> embed_rules_;

  mutable std::mutex mutex_;
  std::map<std::string, int> attempts_;        // request_id -> attempts so far
  std::map<std::string, std::uint64_t> fallback_counters_;  // unparsable ids
  std::vector<Call> calls_;
};

/// Splits "<phase>-<index>[-r<k>]" into its phase; returns the whole id when
/// it does not match the convention.
std::string request_phase(const std::string& request_id);

}  // namespace psi
