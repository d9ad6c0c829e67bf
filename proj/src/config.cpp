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

#include "psi/config.hpp"

#include <nlohmann/json.hpp>

#include "psi/digest.hpp"

namespace psi {

namespace {

using nlohmann::json;

json endpoint_to_json(const RoleEndpoint& endpoint) {
  return {{"base_url", endpoint.base_url},
          {"model", endpoint.model},
          {"api_key_env", endpoint.api_key_env},
          {"dimension", endpoint.dimension}};
}

RoleEndpoint endpoint_from_json(const json& node, RoleEndpoint defaults) {
  defaults.base_url = node.value("base_url", defaults.base_url);
  defaults.model = node.value("model", defaults.model);
  defaults.api_key_env = node.value("api_key_env", defaults.api_key_env);
  defaults.dimension = node.value("dimension", defaults.dimension);
  return defaults;
}

}  // namespace

std::string PipelineConfig::to_json() const {
  json doc;
  doc["endpoints"] = {{"reflector", endpoint_to_json(reflector)},
                      {"generator", endpoint_to_json(generator)},
                      {"embedder", endpoint_to_json(embedder)}};
  doc["T"] = t;
  doc["subset_size"] = subset_size;
  doc["target_initial_size"] = target_initial_size;
  doc["target_dataset_size"] = target_dataset_size;
  doc["tasks_per_request"] = tasks_per_request;
  doc["in_context_examples"] = in_context_examples;
  doc["max_expansion_rounds"] = max_expansion_rounds;
  doc["max_generation_requests"] = max_generation_requests;
  doc["wo_sample_context_budget"] = wo_sample_context_budget;
  doc["dedup_threshold"] = dedup_threshold;
  doc["cluster"] = {{"k_max", cluster_k_max},
                    {"tau", cluster_tau},
                    {"target_dim", cluster_target_dim},
                    {"n_init", cluster_n_init},
                    {"variance_floor", cluster_variance_floor}};
  doc["temperatures"] = {{"expansion", expansion_temperature},
                         {"reflection", reflection_temperature},
                         {"summarization", summarization_temperature},
                         {"generation", generation_temperature}};
  doc["max_completion_tokens"] = max_completion_tokens;
  doc["rng_seed"] = rng_seed;
  doc["retry"] = {{"max_retries", gateway.max_retries},
                  {"backoff_base_ms", gateway.backoff_base_ms},
                  {"backoff_cap_ms", gateway.backoff_cap_ms}};
  doc["parallelism"] = gateway.parallelism;
  doc["carbon"] = {{"carbon_intensity", carbon_intensity},
                   {"wh_per_request", wh_per_request},
                   {"gpu_watts", gpu_watts},
                   {"gpu_hours", gpu_hours},
                   {"measured_kwh", measured_kwh}};
  doc["paths"] = {{"seed_file", seed_file},
                  {"knowledge_dir", knowledge_dir},
                  {"output_dir", output_dir},
                  {"templates_dir", templates_dir}};
  return doc.dump(2) + "\n";
}

PipelineConfig PipelineConfig::from_json(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("config parse error: ") + e.what());
  }
  PipelineConfig config;
  if (doc.contains("endpoints")) {
    const auto& endpoints = doc.at("endpoints");
    if (endpoints.contains("reflector")) {
      config.reflector =
          endpoint_from_json(endpoints.at("reflector"), config.reflector);
    }
    if (endpoints.contains("generator")) {
      config.generator =
          endpoint_from_json(endpoints.at("generator"), config.generator);
    }
    if (endpoints.contains("embedder")) {
      config.embedder =
          endpoint_from_json(endpoints.at("embedder"), config.embedder);
    }
  }
  config.t = doc.value("T", config.t);
  config.subset_size = doc.value("subset_size", config.subset_size);
  config.target_initial_size =
      doc.value("target_initial_size", config.target_initial_size);
  config.target_dataset_size =
      doc.value("target_dataset_size", config.target_dataset_size);
  config.tasks_per_request =
      doc.value("tasks_per_request", config.tasks_per_request);
  config.in_context_examples =
      doc.value("in_context_examples", config.in_context_examples);
  config.max_expansion_rounds =
      doc.value("max_expansion_rounds", config.max_expansion_rounds);
  config.max_generation_requests =
      doc.value("max_generation_requests", config.max_generation_requests);
  config.wo_sample_context_budget =
      doc.value("wo_sample_context_budget", config.wo_sample_context_budget);
  config.dedup_threshold = doc.value("dedup_threshold", config.dedup_threshold);
  if (doc.contains("cluster")) {
    const auto& cluster = doc.at("cluster");
    config.cluster_k_max = cluster.value("k_max", config.cluster_k_max);
    config.cluster_tau = cluster.value("tau", config.cluster_tau);
    config.cluster_target_dim =
        cluster.value("target_dim", config.cluster_target_dim);
    config.cluster_n_init = cluster.value("n_init", config.cluster_n_init);
    config.cluster_variance_floor =
        cluster.value("variance_floor", config.cluster_variance_floor);
  }
  if (doc.contains("temperatures")) {
    const auto& temps = doc.at("temperatures");
    config.expansion_temperature =
        temps.value("expansion", config.expansion_temperature);
    config.reflection_temperature =
        temps.value("reflection", config.reflection_temperature);
    config.summarization_temperature =
        temps.value("summarization", config.summarization_temperature);
    config.generation_temperature =
        temps.value("generation", config.generation_temperature);
  }
  config.max_completion_tokens =
      doc.value("max_completion_tokens", config.max_completion_tokens);
  config.rng_seed = doc.value("rng_seed", config.rng_seed);
  if (doc.contains("retry")) {
    const auto& retry = doc.at("retry");
    config.gateway.max_retries =
        retry.value("max_retries", config.gateway.max_retries);
    config.gateway.backoff_base_ms =
        retry.value("backoff_base_ms", config.gateway.backoff_base_ms);
    config.gateway.backoff_cap_ms =
        retry.value("backoff_cap_ms", config.gateway.backoff_cap_ms);
  }
  config.gateway.parallelism =
      doc.value("parallelism", config.gateway.parallelism);
  if (doc.contains("carbon")) {
    const auto& carbon = doc.at("carbon");
    config.carbon_intensity =
        carbon.value("carbon_intensity", config.carbon_intensity);
    config.wh_per_request = carbon.value("wh_per_request", config.wh_per_request);
    config.gpu_watts = carbon.value("gpu_watts", config.gpu_watts);
    config.gpu_hours = carbon.value("gpu_hours", config.gpu_hours);
    config.measured_kwh = carbon.value("measured_kwh", config.measured_kwh);
  }
  if (doc.contains("paths")) {
    const auto& paths = doc.at("paths");
    config.seed_file = paths.value("seed_file", config.seed_file);
    config.knowledge_dir = paths.value("knowledge_dir", config.knowledge_dir);
    config.output_dir = paths.value("output_dir", config.output_dir);
    config.templates_dir = paths.value("templates_dir", config.templates_dir);
  }
  return config;
}

std::string PipelineConfig::hash() const {
  return sha256_hex(to_json());
}

}  // namespace psi
