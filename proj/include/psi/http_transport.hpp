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

#include "psi/gateway.hpp"

namespace psi {

/// Transport speaking the /v1/chat/completions and /v1/embeddings JSON
/// protocol. One endpoint per role; bearer tokens are resolved from the
/// environment variable named in the endpoint config, never from files.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::map<Role, RoleEndpoint> endpoints)
      : endpoints_(std::move(endpoints)) {}

  ChatResponse chat_once(const ChatRequest& request) override;
  EmbedResponse embed_once(const EmbedRequest& request) override;

 private:
  const RoleEndpoint& endpoint_for(Role role) const;
  std::string post_json(Role role, const std::string& path,
                        const std::string& body) const;

  std::map<Role, RoleEndpoint> endpoints_;
};

}  // namespace psi
