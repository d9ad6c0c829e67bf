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
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "psi/accounting.hpp"
#include "psi/types.hpp"

namespace psi {

enum class FinishReason { Stop, Length, Error };

const char* to_string(FinishReason reason);

struct ChatMessage {
  std::string speaker;  // "system" | "user" | "assistant"
  std::string text;
};

struct ChatRequest {
  Role role = Role::Generator;  // reflector or generator
  std::string model;            // filled from the endpoint config when empty
  std::vector<ChatMessage> messages;
  double temperature = 0.7;
  int max_tokens = 2048;
  std::string request_id;  // "<phase>-<index>" plus optional "-r<k>" re-ask
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
  FinishReason finish_reason = FinishReason::Stop;
};

struct EmbedRequest {
  std::string model;
  std::vector<std::string> texts;
  std::string request_id;
};

struct EmbedResponse {
  std::vector<std::vector<double>> vectors;
  TokenUsage usage;
};

/// Fixed-length embedding with its Euclidean norm.
struct EmbeddingVector {
  std::vector<double> values;
  double norm = 0.0;

  static EmbeddingVector from_values(std::vector<double> values);
};

/// One request-response pair as seen by the gateway, after retries.
struct LmExchange {
  Role role = Role::Generator;
  std::string request_id;
  std::string request_text;  // concatenated message texts
  std::string response_text;
  TokenUsage usage;
  int attempts = 1;
};

/// Low-level wire access. Implementations throw Error(Transport) for
/// retryable failures and Error(Config) for non-retryable ones.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual ChatResponse chat_once(const ChatRequest& request) = 0;
  virtual EmbedResponse embed_once(const EmbedRequest& request) = 0;
};

struct RoleEndpoint {
  std::string base_url;
  std::string model;
  std::string api_key_env;
  int dimension = 0;  // expected embedding width, 0 = take what comes
};

struct GatewayConfig {
  int max_retries = 3;
  int backoff_base_ms = 1000;
  int backoff_cap_ms = 30000;
  int parallelism = 8;
};

/// Vendor-agnostic client for chat-completion and embedding endpoints with
/// retries, usage capture, and a hard privacy guard on the reflector role.
/// Thread-safe; ledger and exchange appends are atomic.
class LmGateway {
 public:
  LmGateway(std::unique_ptr<Transport> transport, GatewayConfig config,
            std::shared_ptr<UsageLedger> ledger);

  void set_endpoint(Role role, RoleEndpoint endpoint);
  const RoleEndpoint& endpoint(Role role) const;

  /// Registers knowledge bodies that must never reach the reflector.
  void register_private_knowledge(const std::vector<KnowledgeSnippet>& snippets);

  ChatResponse chat_complete(ChatRequest request);

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                     const std::string& request_id = "embed-0");

  std::vector<LmExchange> exchanges() const;
  int parallelism() const { return config_.parallelism; }

 private:
  void guard_privacy(const ChatRequest& request) const;
  void backoff_sleep(int attempt) const;

  std::unique_ptr<Transport> transport_;
  GatewayConfig config_;
  std::shared_ptr<UsageLedger> ledger_;
  RoleEndpoint endpoints_[3];
  std::vector<std::string> private_bodies_;

  mutable std::mutex mutex_;
  std::vector<LmExchange> exchanges_;
};

/// Runs fn(0..n-1) on up to `parallelism` threads. Exceptions from workers
/// are rethrown on the calling thread (first index wins).
void parallel_for_ordered(std::size_t n, int parallelism,
                          const std::function<void(std::size_t)>& fn);

}  // namespace psi
