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
#include <functional>

#include "psi/cluster.hpp"
#include "psi/gateway.hpp"
#include "psi/instance_gen.hpp"
#include "psi/prompt_template.hpp"
#include "psi/reflection.hpp"
#include "psi/subset_sampler.hpp"

namespace psi {

struct ExpansionConfig {
  std::size_t target_size = 0;
  int tasks_per_request = 20;
  int in_context_examples = 3;
  double temperature = 0.7;
  int max_tokens = 2048;
  std::size_t max_rounds = 10;
};

/// Expands the seed with the generator until target_size instances exist,
/// seed items first. Only the generator role is called; target == |seed|
/// is a no-op with zero LM calls. Generated items run through the full
/// parse/validate machinery. Throws ShortfallError when max_rounds is
/// exhausted short of the target.
Dataset expand_seed(LmGateway& gateway, const Dataset& seed,
                    const std::vector<KnowledgeSnippet>& knowledge,
                    const PromptTemplate& expansion_template,
                    const ExpansionConfig& config);

/// Hook to filter or anonymize instances before any text reaches the
/// reflector. Returning false drops the instance. Defaults to pass-through.
using InstanceFilter = std::function<bool(const TaskInstance&)>;

struct PoolBuildConfig {
  int t = 10;
  std::size_t subset_size = 10;
  std::uint64_t rng_seed = 0;
  cluster::ClusterConfig clustering;
  ReflectionOptions reflection;
  SummarizationOptions summarization;
  bool skip_clustering = false;         // high-level := low-level verbatim
  bool single_reflection = false;       // one pass over a truncated dataset
  std::size_t context_budget = 16;      // instances for the single pass
  InstanceFilter filter;                // optional operator hook
};

struct PoolBuildStats {
  std::size_t reflections = 0;
  std::size_t low_level_count = 0;
  std::size_t cluster_count = 0;
  std::size_t summarizations = 0;
};

/// Multi-level principle construction: T reflections over sampled subsets,
/// semantic embedding, soft clustering, and one summarization per cluster.
/// Reflections run concurrently bounded by the gateway; assembly is a
/// deterministic reduce ordered by subset index.
PrinciplePool build_pool(LmGateway& gateway, const Dataset& initial,
                         const PromptTemplate& reflection_template,
                         const PromptTemplate& summarization_template,
                         const PoolBuildConfig& config,
                         PoolBuildStats* stats = nullptr);

}  // namespace psi
