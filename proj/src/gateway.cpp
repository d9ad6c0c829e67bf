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

#include "psi/gateway.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "psi/manifest.hpp"

namespace psi {

const char* to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "stop";
}

EmbeddingVector EmbeddingVector::from_values(std::vector<double> values) {
  EmbeddingVector v;
  double sum = 0.0;
  for (double x : values) {
    if (!std::isfinite(x)) {
      throw Error(ErrorKind::Integrity, "non-finite embedding entry");
    }
    sum += x * x;
  }
  v.values = std::move(values);
  v.norm = std::sqrt(sum);
  return v;
}

LmGateway::LmGateway(std::unique_ptr<Transport> transport, GatewayConfig config,
                     std::shared_ptr<UsageLedger> ledger)
    : transport_(std::move(transport)),
      config_(config),
      ledger_(std::move(ledger)) {
  if (!transport_) {
    throw Error(ErrorKind::Config, "gateway constructed without a transport");
  }
  if (!ledger_) ledger_ = std::make_shared<UsageLedger>();
}

void LmGateway::set_endpoint(Role role, RoleEndpoint endpoint) {
  endpoints_[static_cast<int>(role)] = std::move(endpoint);
}

const RoleEndpoint& LmGateway::endpoint(Role role) const {
  return endpoints_[static_cast<int>(role)];
}

void LmGateway::register_private_knowledge(
    const std::vector<KnowledgeSnippet>& snippets) {
  std::lock_guard<std::mutex> lock(mutex_);
  for (const auto& snippet : snippets) {
    if (!snippet.body.empty()) private_bodies_.push_back(snippet.body);
  }
}

void LmGateway::guard_privacy(const ChatRequest& request) const {
  if (request.role != Role::Reflector) return;
  std::lock_guard<std::mutex> lock(mutex_);
  for (const auto& body : private_bodies_) {
    for (const auto& message : request.messages) {
      if (message.text.find(body) != std::string::npos) {
        throw Error(ErrorKind::Privacy,
                    "reflector request " + request.request_id +
                        " contains private knowledge material");
      }
    }
  }
}

void LmGateway::backoff_sleep(int attempt) const {
  if (config_.backoff_base_ms <= 0) return;
  double delay = config_.backoff_base_ms * std::pow(2.0, attempt - 1);
  delay = std::min(delay, static_cast<double>(config_.backoff_cap_ms));
  std::this_thread::sleep_for(
      std::chrono::milliseconds(static_cast<long>(delay)));
}

ChatResponse LmGateway::chat_complete(ChatRequest request) {
  if (request.messages.empty()) {
    throw Error(ErrorKind::Precondition, "chat request has no messages");
  }
  if (request.role == Role::Embedder) {
    throw Error(ErrorKind::Precondition, "embedder role cannot chat");
  }
  guard_privacy(request);
  const RoleEndpoint& ep = endpoint(request.role);
  if (request.model.empty()) request.model = ep.model;

  ChatResponse response;
  int attempt = 0;
  for (;;) {
    ++attempt;
    try {
      response = transport_->chat_once(request);
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Transport) throw;  // 4xx etc: no retry
      if (attempt >= config_.max_retries) {
        throw Error(ErrorKind::Gateway,
                    "request " + request.request_id + " failed after " +
                        std::to_string(attempt) + " attempts: " + e.what());
      }
      backoff_sleep(attempt);
    }
  }

  UsageRecord record;
  record.role = request.role;
  record.request_id = request.request_id;
  record.usage = response.usage;
  record.timestamp = iso8601_utc_now();
  ledger_->append(std::move(record));

  LmExchange exchange;
  exchange.role = request.role;
  exchange.request_id = request.request_id;
  for (const auto& message : request.messages) {
    exchange.request_text += message.text;
    exchange.request_text += '\n';
  }
  exchange.response_text = response.text;
  exchange.usage = response.usage;
  exchange.attempts = attempt;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    exchanges_.push_back(std::move(exchange));
  }
  return response;
}

std::vector<EmbeddingVector> LmGateway::embed(
    const std::vector<std::string>& texts, const std::string& request_id) {
  if (texts.empty()) {
    throw Error(ErrorKind::Precondition, "embed called with no texts");
  }
  for (const auto& text : texts) {
    if (trim_copy(text).empty()) {
      throw Error(ErrorKind::Precondition, "embed called with an empty text");
    }
  }
  const RoleEndpoint& ep = endpoint(Role::Embedder);
  EmbedRequest request;
  request.model = ep.model;
  request.texts = texts;
  request.request_id = request_id;

  EmbedResponse response;
  int attempt = 0;
  for (;;) {
    ++attempt;
    try {
      response = transport_->embed_once(request);
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Transport) throw;
      if (attempt >= config_.max_retries) {
        throw Error(ErrorKind::Gateway,
                    "embedding request failed after " +
                        std::to_string(attempt) + " attempts: " + e.what());
      }
      backoff_sleep(attempt);
    }
  }

  if (response.vectors.size() != texts.size()) {
    throw Error(ErrorKind::Integrity, "embedding count mismatch");
  }
  std::size_t dim = response.vectors.empty() ? 0 : response.vectors[0].size();
  if (ep.dimension > 0) dim = static_cast<std::size_t>(ep.dimension);
  std::vector<EmbeddingVector> out;
  out.reserve(response.vectors.size());
  for (auto& values : response.vectors) {
    if (values.size() != dim) {
      throw Error(ErrorKind::Integrity,
                  "embedding dimension mismatch within batch");
    }
    out.push_back(EmbeddingVector::from_values(std::move(values)));
  }

  UsageRecord record;
  record.role = Role::Embedder;
  record.request_id = request_id;
  record.usage = response.usage;
  record.timestamp = iso8601_utc_now();
  ledger_->append(std::move(record));

  LmExchange exchange;
  exchange.role = Role::Embedder;
  exchange.request_id = request_id;
  for (const auto& text : texts) {
    exchange.request_text += text;
    exchange.request_text += '\n';
  }
  exchange.usage = response.usage;
  exchange.attempts = attempt;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    exchanges_.push_back(std::move(exchange));
  }
  return out;
}

std::vector<LmExchange> LmGateway::exchanges() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return exchanges_;
}

void parallel_for_ordered(std::size_t n, int parallelism,
                          const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(
                                   parallelism > 0 ? parallelism : 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_index = n;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  for (auto& thread : threads) thread.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace psi
