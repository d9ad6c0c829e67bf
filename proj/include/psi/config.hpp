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
#include <string>

#include "psi/gateway.hpp"

namespace psi {

/// Everything a run needs, with the published defaults baked in:
/// T = 10 subsets of 10, a 20K-instance final dataset. JSON config files
/// fill fields, CLI flags override them, and API keys come exclusively
/// from environment variables.
struct PipelineConfig {
  // Endpoints per role.
  RoleEndpoint reflector{"", "gpt-3.5-turbo", "PSI_REFLECTOR_API_KEY", 0};
  RoleEndpoint generator{"", "zephyr-7b-beta", "PSI_GENERATOR_API_KEY", 0};
  RoleEndpoint embedder{"", "all-mpnet-base-v2", "PSI_EMBEDDER_API_KEY", 0};

  // Stage sizes.
  int t = 10;
  std::size_t subset_size = 10;
  std::size_t target_initial_size = 100;
  std::size_t target_dataset_size = 20000;
  int tasks_per_request = 20;
  int in_context_examples = 3;
  std::size_t max_expansion_rounds = 10;
  std::size_t max_generation_requests = 0;  // 0 = auto (4x the minimum)
  std::size_t wo_sample_context_budget = 16;

  // Dedup and clustering.
  double dedup_threshold = 0.7;
  int cluster_k_max = 10;
  double cluster_tau = 0.1;
  int cluster_target_dim = 8;
  int cluster_n_init = 5;
  double cluster_variance_floor = 1e-6;

  // Sampling temperatures per stage.
  double expansion_temperature = 0.7;
  double reflection_temperature = 0.7;
  double summarization_temperature = 0.3;
  double generation_temperature = 0.7;
  int max_completion_tokens = 2048;

  // Reproducibility and transport.
  std::uint64_t rng_seed = 0;
  GatewayConfig gateway;

  // Carbon reporting inputs (nameplate method).
  double carbon_intensity = 0.24;
  double wh_per_request = 2.9;
  double gpu_watts = 250.0;
  double gpu_hours = 0.0;
  double measured_kwh = -1.0;  // >= 0 overrides the nameplate estimate

  // Paths.
  std::string seed_file;
  std::string knowledge_dir;
  std::string output_dir = "out";
  std::string templates_dir;  // empty = built-in templates

  std::string to_json() const;
  static PipelineConfig from_json(std::string_view bytes);

  /// Digest over the canonical JSON form.
  std::string hash() const;
};

}  // namespace psi
