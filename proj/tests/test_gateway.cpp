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

#include <doctest.h>

#include <memory>

#include "psi/gateway.hpp"
#include "psi/mock_transport.hpp"

using namespace psi;

namespace {

GatewayConfig fast_config() {
  GatewayConfig config;
  config.max_retries = 3;
  config.backoff_base_ms = 0;  // no sleeping in tests
  return config;
}

/// Embedder that maps a text of length L to [L, 0, 0].
class LengthEmbedTransport : public Transport {
 public:
  ChatResponse chat_once(const ChatRequest&) override {
    throw Error(ErrorKind::Config, "chat not scripted");
  }
  EmbedResponse embed_once(const EmbedRequest& request) override {
    EmbedResponse response;
    for (const auto& text : request.texts) {
      response.vectors.push_back({static_cast<double>(text.size()), 0.0, 0.0});
    }
    return response;
  }
};

ChatRequest user_request(Role role, const std::string& text,
                         const std::string& id) {
  ChatRequest request;
  request.role = role;
  request.messages = {{"user", text}};
  request.request_id = id;
  return request;
}

}  // namespace

TEST_CASE("scripted mock passes text and usage through") {
  auto mock = std::make_unique<MockTransport>();
  mock->add_chat_entries("gen", {{"OK", 11, 7, FinishReason::Stop, 0, 200}});
  auto ledger = std::make_shared<UsageLedger>();
  LmGateway gateway(std::move(mock), fast_config(), ledger);

  ChatResponse response =
      gateway.chat_complete(user_request(Role::Generator, "hello", "gen-0"));
  CHECK(response.text == "OK");
  CHECK(response.usage.prompt_tokens == 11);
  CHECK(response.usage.completion_tokens == 7);
  CHECK(response.usage.total() == 18);
  CHECK(ledger->request_count(Role::Generator) == 1);
}

TEST_CASE("two scripted failures then success within three retries") {
  auto mock = std::make_unique<MockTransport>();
  MockTransport* raw = mock.get();
  mock->add_chat_entries("gen", {{"eventually", 1, 1, FinishReason::Stop,
                                  /*fail_times=*/2, 200}});
  LmGateway gateway(std::move(mock), fast_config(), nullptr);

  ChatResponse response =
      gateway.chat_complete(user_request(Role::Generator, "x", "gen-0"));
  CHECK(response.text == "eventually");
  // All three attempts are visible in the transport log.
  CHECK(raw->calls().size() == 3);
  CHECK(gateway.exchanges().back().attempts == 3);
}

TEST_CASE("persistent transport failure surfaces as a gateway error") {
  auto mock = std::make_unique<MockTransport>();
  mock->add_chat_entries("gen",
                         {{"never", 1, 1, FinishReason::Stop, 99, 200}});
  LmGateway gateway(std::move(mock), fast_config(), nullptr);
  try {
    gateway.chat_complete(user_request(Role::Generator, "x", "gen-0"));
    FAIL("expected gateway error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Gateway);
  }
}

TEST_CASE("HTTP 4xx is a configuration error and is not retried") {
  auto mock = std::make_unique<MockTransport>();
  MockTransport* raw = mock.get();
  mock->add_chat_entries("gen", {{"", 0, 0, FinishReason::Stop, 0, 401}});
  LmGateway gateway(std::move(mock), fast_config(), nullptr);
  try {
    gateway.chat_complete(user_request(Role::Generator, "x", "gen-0"));
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  CHECK(raw->calls().size() == 1);  // no retry
}

TEST_CASE("finish_reason length is surfaced, not an error") {
  auto mock = std::make_unique<MockTransport>();
  mock->add_chat_entries("gen",
                         {{"truncated...", 5, 5, FinishReason::Length, 0, 200}});
  LmGateway gateway(std::move(mock), fast_config(), nullptr);
  ChatResponse response =
      gateway.chat_complete(user_request(Role::Generator, "x", "gen-0"));
  CHECK(response.finish_reason == FinishReason::Length);
}

TEST_CASE("length-scripted embedder maps lengths in order") {
  LmGateway gateway(std::make_unique<LengthEmbedTransport>(), fast_config(),
                    nullptr);
  auto vectors = gateway.embed({"ab", "abc"});
  REQUIRE(vectors.size() == 2);
  CHECK(vectors[0].values == std::vector<double>{2.0, 0.0, 0.0});
  CHECK(vectors[1].values == std::vector<double>{3.0, 0.0, 0.0});
  CHECK(vectors[1].norm == doctest::Approx(3.0));
}

TEST_CASE("embedding an empty batch is a precondition error") {
  LmGateway gateway(std::make_unique<LengthEmbedTransport>(), fast_config(),
                    nullptr);
  try {
    gateway.embed({});
    FAIL("expected precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
}

TEST_CASE("identical strings embed to identical vectors") {
  auto mock = std::make_unique<MockTransport>();
  mock->set_embedding_dim(6);
  LmGateway gateway(std::move(mock), fast_config(), nullptr);
  auto vectors = gateway.embed({"repeatable text", "repeatable text", "other"});
  CHECK(vectors[0].values == vectors[1].values);
  CHECK(vectors[0].values != vectors[2].values);
}

TEST_CASE("embedding dimension mismatch is an integrity error") {
  class RaggedTransport : public Transport {
   public:
    ChatResponse chat_once(const ChatRequest&) override {
      throw Error(ErrorKind::Config, "unused");
    }
    EmbedResponse embed_once(const EmbedRequest&) override {
      EmbedResponse response;
      response.vectors = {{1.0, 2.0}, {1.0, 2.0, 3.0}};
      return response;
    }
  };
  LmGateway gateway(std::make_unique<RaggedTransport>(), fast_config(), nullptr);
  try {
    gateway.embed({"a", "b"});
    FAIL("expected integrity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Integrity);
  }
}

TEST_CASE("ledger totals equal the sum of per-exchange usage exactly") {
  auto mock = std::make_unique<MockTransport>();
  mock->add_chat_entries("gen", {{"a", 10, 3, FinishReason::Stop, 0, 200},
                                 {"b", 7, 9, FinishReason::Stop, 0, 200}});
  mock->add_chat_entries("reflect", {{"Insights:\n- x", 21, 2,
                                      FinishReason::Stop, 0, 200}});
  auto ledger = std::make_shared<UsageLedger>();
  LmGateway gateway(std::move(mock), fast_config(), ledger);

  gateway.chat_complete(user_request(Role::Generator, "1", "gen-0"));
  gateway.chat_complete(user_request(Role::Generator, "2", "gen-1"));
  gateway.chat_complete(user_request(Role::Reflector, "3", "reflect-0"));

  TokenUsage generator_sum;
  TokenUsage reflector_sum;
  for (const auto& record : ledger->snapshot()) {
    if (record.role == Role::Generator) generator_sum += record.usage;
    if (record.role == Role::Reflector) reflector_sum += record.usage;
  }
  auto totals = ledger->totals_by_role();
  CHECK(totals[Role::Generator].prompt_tokens == generator_sum.prompt_tokens);
  CHECK(totals[Role::Generator].completion_tokens ==
        generator_sum.completion_tokens);
  CHECK(totals[Role::Reflector].prompt_tokens == reflector_sum.prompt_tokens);
  CHECK(totals[Role::Generator].prompt_tokens == 17);
  CHECK(totals[Role::Generator].completion_tokens == 12);
}

TEST_CASE("ledger csv round trip preserves totals") {
  auto ledger = std::make_shared<UsageLedger>();
  ledger->append({Role::Generator, "gen-0", {100, 50}, "2026-01-01T00:00:00Z"});
  ledger->append({Role::Reflector, "reflect-0", {30, 20}, ""});
  UsageLedger reloaded;
  reloaded.load_csv(ledger->to_csv());
  CHECK(reloaded.totals_by_role() == ledger->totals_by_role());
}

TEST_CASE("privacy guard blocks knowledge bodies on the reflector role") {
  auto mock = std::make_unique<MockTransport>();
  mock->add_chat_entries("reflect", {{"Insights:\n- ok", 1, 1,
                                      FinishReason::Stop, 0, 200}});
  mock->add_chat_entries("gen", {{"fine", 1, 1, FinishReason::Stop, 0, 200}});
  LmGateway gateway(std::move(mock), fast_config(), nullptr);
  gateway.register_private_knowledge(
      {{"k1", "the secret internal API of the payment service", {}}});

  // The generator may carry the knowledge.
  CHECK_NOTHROW(gateway.chat_complete(user_request(
      Role::Generator, "use the secret internal API of the payment service",
      "gen-0")));

  // The reflector must never see it.
  try {
    gateway.chat_complete(user_request(
        Role::Reflector,
        "analyze the secret internal API of the payment service", "reflect-0"));
    FAIL("expected privacy error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Privacy);
  }
  // Clean prompts still pass.
  CHECK_NOTHROW(gateway.chat_complete(
      user_request(Role::Reflector, "analyze these instances", "reflect-0")));
}

TEST_CASE("mock runs are bit-deterministic given the same script") {
  const char* script = R"({
    "chat": {"gen": [{"text": "same", "prompt_tokens": 2, "completion_tokens": 3}]},
    "embeddings": {"dim": 4}
  })";
  for (int run = 0; run < 2; ++run) {
    LmGateway gateway(MockTransport::from_script(script), fast_config(),
                      nullptr);
    ChatResponse response =
        gateway.chat_complete(user_request(Role::Generator, "in", "gen-0"));
    CHECK(response.text == "same");
    auto vectors = gateway.embed({"alpha", "beta"});
    static std::vector<double> first_alpha;
    if (run == 0) {
      first_alpha = vectors[0].values;
    } else {
      CHECK(vectors[0].values == first_alpha);
    }
  }
}
