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

#include "psi/manifest.hpp"

#include <ctime>

#include <nlohmann/json.hpp>

#include "psi/error.hpp"

namespace psi {

void RunManifest::record_stage(const std::string& stage,
                               const std::string& digest) {
  stage_outputs[stage] = digest;
  timestamps[stage] = iso8601_utc_now();
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json doc;
  doc["rng_seed"] = rng_seed;
  doc["config_hash"] = config_hash;
  doc["stage_outputs"] = stage_outputs;
  nlohmann::ordered_json usage;
  for (const auto& [role, tokens] : usage_by_role) {
    usage[to_string(role)] = {{"prompt_tokens", tokens.prompt_tokens},
                              {"completion_tokens", tokens.completion_tokens}};
  }
  doc["usage_by_role"] = std::move(usage);
  doc["timestamps"] = timestamps;
  doc["stage_stats"] = stage_stats;
  return doc.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse,
                std::string("manifest parse error: ") + e.what());
  }
  RunManifest manifest;
  manifest.rng_seed = doc.value("rng_seed", std::uint64_t{0});
  manifest.config_hash = doc.value("config_hash", std::string{});
  if (doc.contains("stage_outputs")) {
    manifest.stage_outputs =
        doc.at("stage_outputs").get<std::map<std::string, std::string>>();
  }
  if (doc.contains("usage_by_role")) {
    for (const auto& [name, usage] : doc.at("usage_by_role").items()) {
      TokenUsage tokens;
      tokens.prompt_tokens = usage.value("prompt_tokens", std::uint64_t{0});
      tokens.completion_tokens =
          usage.value("completion_tokens", std::uint64_t{0});
      manifest.usage_by_role[role_from_string(name)] = tokens;
    }
  }
  if (doc.contains("timestamps")) {
    manifest.timestamps =
        doc.at("timestamps").get<std::map<std::string, std::string>>();
  }
  if (doc.contains("stage_stats")) {
    manifest.stage_stats =
        doc.at("stage_stats").get<std::map<std::string, std::uint64_t>>();
  }
  return manifest;
}

std::string iso8601_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

}  // namespace psi
