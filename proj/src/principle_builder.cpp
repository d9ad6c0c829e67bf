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

#include "psi/principle_builder.hpp"

#include <algorithm>

namespace psi {

Dataset expand_seed(LmGateway& gateway, const Dataset& seed,
                    const std::vector<KnowledgeSnippet>& knowledge,
                    const PromptTemplate& expansion_template,
                    const ExpansionConfig& config) {
  if (seed.empty()) {
    throw Error(ErrorKind::Precondition, "seed dataset is empty");
  }
  if (config.target_size < seed.size()) {
    throw Error(ErrorKind::Precondition,
                "expansion target is smaller than the seed");
  }

  Dataset initial;
  initial.label = DatasetLabel::Initial;
  for (const auto& item : seed.items) initial.items.push_back(item);

  if (config.target_size == seed.size()) {
    return initial;  // nothing to expand, zero LM calls
  }

  const std::size_t needed = config.target_size - seed.size();
  std::vector<std::string> seen_instructions;
  for (const auto& item : seed.items) {
    seen_instructions.push_back(item.instruction);
  }

  for (std::size_t round = 0; round < config.max_rounds; ++round) {
    if (initial.size() >= config.target_size) break;

    // Expansion has no principles yet; the prompt is the principle-free
    // template with the seed itself as in-context examples.
    std::vector<TaskInstance> examples;
    for (int j = 0; j < config.in_context_examples && !seed.items.empty(); ++j) {
      std::size_t at =
          (round * static_cast<std::size_t>(config.in_context_examples) +
           static_cast<std::size_t>(j)) %
          seed.size();
      examples.push_back(seed.items[at]);
    }

    std::map<std::string, std::string> bindings = {
        {"N_TASKS", std::to_string(config.tasks_per_request)}};
    if (expansion_template.body.find("{KNOWLEDGE}") != std::string::npos) {
      bindings["KNOWLEDGE"] = render_knowledge_section(knowledge);
    }
    std::string prompt = expansion_template.render(bindings);
    if (!knowledge.empty() &&
        expansion_template.body.find("{KNOWLEDGE}") == std::string::npos) {
      std::size_t at = prompt.rfind("List of ");
      const std::string section = render_knowledge_section(knowledge);
      if (at != std::string::npos) {
        prompt.insert(at, section + "\n");
      } else {
        prompt += "\n" + section;
      }
    }
    prompt += render_example_blocks(examples);

    ChatRequest request;
    request.role = Role::Generator;
    request.messages = {{"user", prompt}};
    request.temperature = config.temperature;
    request.max_tokens = config.max_tokens;
    request.request_id = "expand-" + std::to_string(round);

    ChatResponse response = gateway.chat_complete(request);
    ParsedBatch batch;
    try {
      batch = parse_generated_tasks(response.text, request.request_id);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Parse) throw;
      continue;  // a fully unparseable round costs one attempt
    }

    for (auto& task : batch.tasks) {
      if (initial.size() >= config.target_size) break;
      task.origin = Origin::InitialExpansion;
      if (!validate_instance(task).accepted) continue;
      bool duplicate = false;
      for (const auto& existing : seen_instructions) {
        if (existing == task.instruction) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) continue;
      seen_instructions.push_back(task.instruction);
      initial.items.push_back(std::move(task));
    }
  }

  if (initial.size() < config.target_size) {
    throw ShortfallError(
        "expansion reached " + std::to_string(initial.size()) + " of " +
            std::to_string(config.target_size) + " instances (needed " +
            std::to_string(needed) + " new)",
        std::move(initial), config.target_size);
  }
  return initial;
}

PrinciplePool build_pool(LmGateway& gateway, const Dataset& initial,
                         const PromptTemplate& reflection_template,
                         const PromptTemplate& summarization_template,
                         const PoolBuildConfig& config, PoolBuildStats* stats) {
  if (initial.empty()) {
    throw Error(ErrorKind::Precondition, "cannot reflect over an empty dataset");
  }

  // Operator hook: filter/anonymize before anything reaches the reflector.
  Dataset visible;
  visible.label = initial.label;
  for (const auto& item : initial.items) {
    if (!config.filter || config.filter(item)) visible.items.push_back(item);
  }
  if (visible.empty()) {
    throw Error(ErrorKind::Precondition,
                "instance filter removed every instance");
  }

  // Assemble the reflection subsets.
  std::vector<std::vector<TaskInstance>> subsets;
  if (config.single_reflection) {
    // One pass over as many instances as the context budget allows.
    std::vector<TaskInstance> truncated;
    const std::size_t budget =
        std::min<std::size_t>(config.context_budget, visible.size());
    for (std::size_t i = 0; i < budget; ++i) {
      truncated.push_back(visible.items[i]);
    }
    subsets.push_back(std::move(truncated));
  } else {
    const std::size_t subset_size =
        std::min<std::size_t>(config.subset_size, visible.size());
    for (const auto& sample :
         sample_subsets(visible.size(), config.t, subset_size, config.rng_seed)) {
      std::vector<TaskInstance> subset;
      subset.reserve(sample.instance_indices.size());
      for (std::size_t index : sample.instance_indices) {
        subset.push_back(visible.items[index]);
      }
      subsets.push_back(std::move(subset));
    }
  }

  // Reflections may run concurrently; the reduce below is ordered by
  // subset index, so assembly stays deterministic.
  std::vector<std::vector<LowLevelPrinciple>> reflected(subsets.size());
  try {
    parallel_for_ordered(subsets.size(), gateway.parallelism(),
                         [&](std::size_t i) {
                           reflected[i] = reflect_low_level(
                               gateway, subsets[i], reflection_template,
                               static_cast<int>(i), config.reflection);
                         });
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("reflection stage: ") + e.what());
  }

  PrinciplePool pool;
  for (auto& batch : reflected) {
    for (auto& principle : batch) pool.low_level.push_back(std::move(principle));
  }
  if (stats != nullptr) {
    stats->reflections = subsets.size();
    stats->low_level_count = pool.low_level.size();
  }

  if (config.skip_clustering) {
    // Low-level principles guide generation directly: one singleton
    // cluster per principle, texts promoted verbatim.
    for (std::size_t i = 0; i < pool.low_level.size(); ++i) {
      PrincipleCluster cluster;
      cluster.member_indices = {i};
      pool.clusters.push_back(std::move(cluster));
      HighLevelPrinciple high;
      high.text = pool.low_level[i].text;
      high.cluster_index = static_cast<int>(i);
      pool.high_level.push_back(std::move(high));
    }
    pool.n = pool.high_level.size();
    pool.validate();
    if (stats != nullptr) stats->cluster_count = pool.n;
    return pool;
  }

  // Embed every low-level principle text, order-preserving.
  std::vector<std::string> texts;
  texts.reserve(pool.low_level.size());
  for (const auto& principle : pool.low_level) texts.push_back(principle.text);
  std::vector<EmbeddingVector> embeddings;
  try {
    embeddings = gateway.embed(texts, "embed-0");
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("embedding stage: ") + e.what());
  }
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    pool.low_level[i].embedding = embeddings[i].values;
  }

  try {
    pool.clusters = cluster::cluster_principles(pool.low_level,
                                                config.clustering,
                                                config.rng_seed);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("clustering stage: ") + e.what());
  }
  if (stats != nullptr) stats->cluster_count = pool.clusters.size();

  // Summarize clusters in index order; one reflector call per cluster.
  pool.high_level.resize(pool.clusters.size());
  try {
    parallel_for_ordered(
        pool.clusters.size(), gateway.parallelism(), [&](std::size_t k) {
          std::vector<std::string> member_texts;
          for (std::size_t member : pool.clusters[k].member_indices) {
            member_texts.push_back(pool.low_level[member].text);
          }
          pool.high_level[k] =
              summarize_cluster(gateway, member_texts, summarization_template,
                                static_cast<int>(k), config.summarization);
        });
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("summarization stage: ") + e.what());
  }
  if (stats != nullptr) stats->summarizations = pool.clusters.size();

  pool.n = pool.high_level.size();
  pool.validate();
  return pool;
}

}  // namespace psi
