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

#include <string>
#include <vector>

#include "psi/gateway.hpp"
#include "psi/prompt_template.hpp"
#include "psi/types.hpp"

namespace psi {

struct ReflectionResult {
  std::string reasoning;
  std::vector<std::string> insights;
};

/// Splits a reflector response on the "Reasoning:" and "Insights:" headers
/// (case-insensitive, tolerant of markdown adornment) and collects the
/// nonempty bullet or numbered lines after the Insights header.
/// Throws Error(Parse) when the Insights section is missing or empty.
ReflectionResult parse_reflection(const std::string& text);

struct ReflectionOptions {
  double temperature = 0.7;
  int max_tokens = 1024;
};

/// One reflector call over a subset, with a single automatic re-ask when
/// the response does not parse. Principles are tagged with subset_index.
std::vector<LowLevelPrinciple> reflect_low_level(
    LmGateway& gateway, const std::vector<TaskInstance>& subset_instances,
    const PromptTemplate& reflection_template, int subset_index,
    const ReflectionOptions& options = {});

struct SummarizationOptions {
  double temperature = 0.3;
  int max_tokens = 512;
};

/// Summarizes one cluster's member texts into a single high-level
/// principle; strips any leading "Principle:" label from the response.
HighLevelPrinciple summarize_cluster(
    LmGateway& gateway, const std::vector<std::string>& member_texts,
    const PromptTemplate& summarization_template, int cluster_index,
    const SummarizationOptions& options = {});

}  // namespace psi
