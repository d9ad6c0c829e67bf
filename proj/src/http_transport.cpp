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

#include "psi/http_transport.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace psi {

namespace {

using nlohmann::json;

FinishReason finish_reason_from(const std::string& name) {
  if (name == "length") return FinishReason::Length;
  if (name == "stop") return FinishReason::Stop;
  return FinishReason::Error;
}

}  // namespace

const RoleEndpoint& HttpTransport::endpoint_for(Role role) const {
  auto it = endpoints_.find(role);
  if (it == endpoints_.end() || it->second.base_url.empty()) {
    throw Error(ErrorKind::Config,
                std::string("no endpoint configured for role ") +
                    to_string(role));
  }
  return it->second;
}

std::string HttpTransport::post_json(Role role, const std::string& path,
                                     const std::string& body) const {
  const RoleEndpoint& ep = endpoint_for(role);

  httplib::Client client(ep.base_url);
  client.set_connection_timeout(30);
  client.set_read_timeout(600);
  client.set_write_timeout(60);

  httplib::Headers headers;
  if (!ep.api_key_env.empty()) {
    const char* key = std::getenv(ep.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorKind::Config,
                  "API key environment variable not set: " + ep.api_key_env);
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  auto result = client.Post(path, headers, body, "application/json");
  if (!result) {
    throw Error(ErrorKind::Transport,
                "transport failure: " + httplib::to_string(result.error()));
  }
  if (result->status >= 400 && result->status < 500) {
    throw Error(ErrorKind::Config, "HTTP " + std::to_string(result->status) +
                                       " from " + ep.base_url + path + ": " +
                                       result->body.substr(0, 200));
  }
  if (result->status >= 500) {
    throw Error(ErrorKind::Transport,
                "HTTP " + std::to_string(result->status) + " from " +
                    ep.base_url + path);
  }
  return result->body;
}

ChatResponse HttpTransport::chat_once(const ChatRequest& request) {
  json body;
  body["model"] = request.model;
  json messages = json::array();
  for (const auto& message : request.messages) {
    messages.push_back({{"role", message.speaker}, {"content", message.text}});
  }
  body["messages"] = std::move(messages);
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;

  std::string raw = post_json(request.role, "/v1/chat/completions", body.dump());
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Transport,
                std::string("unparseable completion body: ") + e.what());
  }

  ChatResponse response;
  try {
    const auto& choice = doc.at("choices").at(0);
    response.text = choice.at("message").at("content").get<std::string>();
    response.finish_reason =
        finish_reason_from(choice.value("finish_reason", "stop"));
    if (doc.contains("usage")) {
      // Provider-counted tokens; never re-tokenized locally.
      response.usage.prompt_tokens =
          doc["usage"].value("prompt_tokens", std::uint64_t{0});
      response.usage.completion_tokens =
          doc["usage"].value("completion_tokens", std::uint64_t{0});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Transport,
                std::string("unexpected completion schema: ") + e.what());
  }
  return response;
}

EmbedResponse HttpTransport::embed_once(const EmbedRequest& request) {
  json body;
  body["model"] = request.model;
  body["input"] = request.texts;

  std::string raw = post_json(Role::Embedder, "/v1/embeddings", body.dump());
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Transport,
                std::string("unparseable embedding body: ") + e.what());
  }

  EmbedResponse response;
  try {
    for (const auto& item : doc.at("data")) {
      response.vectors.push_back(item.at("embedding").get<std::vector<double>>());
    }
    if (doc.contains("usage")) {
      response.usage.prompt_tokens =
          doc["usage"].value("prompt_tokens", std::uint64_t{0});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Transport,
                std::string("unexpected embedding schema: ") + e.what());
  }
  return response;
}

}  // namespace psi
