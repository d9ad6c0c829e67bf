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
#include <string>

#include "psi/accounting.hpp"

namespace psi {

/// Reproducibility record of a pipeline run. Identical rng_seed +
/// config_hash + identical transcripts give identical stage_outputs digests;
/// timestamps are informational only.
struct RunManifest {
  std::uint64_t rng_seed = 0;
  std::string config_hash;
  std::map<std::string, std::string> stage_outputs;  // stage -> content digest
  std::map<Role, TokenUsage> usage_by_role;
  std::map<std::string, std::string> timestamps;     // stage -> ISO-8601 UTC
  std::map<std::string, std::uint64_t> stage_stats;  // free-form counters

  void record_stage(const std::string& stage, const std::string& digest);

  std::string to_json() const;
  static RunManifest from_json(std::string_view bytes);
};

/// Current time as ISO-8601 UTC with second resolution.
std::string iso8601_utc_now();

}  // namespace psi
