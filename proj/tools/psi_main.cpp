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

#include <cstdint>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "psi/dataset_io.hpp"
#include "psi/http_transport.hpp"
#include "psi/mock_transport.hpp"
#include "psi/pipeline.hpp"

namespace {

// Exit codes: 0 success, 1 stage failure, 2 configuration/input failure,
// 3 yield shortfall.
constexpr int kExitOk = 0;
constexpr int kExitStage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitShortfall = 3;

int exit_code_for(const psi::Error& error) {
  switch (error.kind()) {
    case psi::ErrorKind::Config:
    case psi::ErrorKind::Schema:
    case psi::ErrorKind::Parse:
    case psi::ErrorKind::EmptyDataset:
    case psi::ErrorKind::Precondition:
      return kExitConfig;
    case psi::ErrorKind::Shortfall:
      return kExitShortfall;
    default:
      return kExitStage;
  }
}

struct CliOptions {
  std::string config_path;
  std::string mock_script;
  std::string seed_file;
  std::string knowledge_dir;
  std::string output_dir;
  std::string templates_dir;
  std::string pool_path;
  std::string run_dir;
  std::string mode;
  std::vector<std::size_t> sizes;
  std::int64_t rng_seed = -1;
  std::int64_t t = -1;
  std::int64_t subset_size = -1;
  std::int64_t target_initial = -1;
  std::int64_t size = -1;
  std::int64_t tasks_per_request = -1;
  std::int64_t index = -1;
  double dedup_threshold = -1.0;
  bool force = false;
  bool wo_initial = false;
  bool wo_sample = false;
  bool wo_cluster = false;
  bool merge_seed = false;
};

psi::PipelineConfig effective_config(const CliOptions& options) {
  psi::PipelineConfig config;
  if (!options.config_path.empty()) {
    config = psi::PipelineConfig::from_json(psi::read_file(options.config_path));
  }
  // Flags override file values.
  if (!options.seed_file.empty()) config.seed_file = options.seed_file;
  if (!options.knowledge_dir.empty()) config.knowledge_dir = options.knowledge_dir;
  if (!options.output_dir.empty()) config.output_dir = options.output_dir;
  if (!options.templates_dir.empty()) config.templates_dir = options.templates_dir;
  if (options.rng_seed >= 0) {
    config.rng_seed = static_cast<std::uint64_t>(options.rng_seed);
  }
  if (options.t > 0) config.t = static_cast<int>(options.t);
  if (options.subset_size > 0) {
    config.subset_size = static_cast<std::size_t>(options.subset_size);
  }
  if (options.target_initial > 0) {
    config.target_initial_size = static_cast<std::size_t>(options.target_initial);
  }
  if (options.size > 0) {
    config.target_dataset_size = static_cast<std::size_t>(options.size);
  }
  if (options.tasks_per_request > 0) {
    config.tasks_per_request = static_cast<int>(options.tasks_per_request);
  }
  if (options.dedup_threshold > 0.0) {
    config.dedup_threshold = options.dedup_threshold;
  }
  return config;
}

std::unique_ptr<psi::Transport> make_transport(const CliOptions& options,
                                               const psi::PipelineConfig& config) {
  if (!options.mock_script.empty()) {
    return psi::MockTransport::from_script(psi::read_file(options.mock_script));
  }
  std::map<psi::Role, psi::RoleEndpoint> endpoints = {
      {psi::Role::Reflector, config.reflector},
      {psi::Role::Generator, config.generator},
      {psi::Role::Embedder, config.embedder},
  };
  return std::make_unique<psi::HttpTransport>(std::move(endpoints));
}

psi::Pipeline make_pipeline(const CliOptions& options) {
  psi::PipelineConfig config = effective_config(options);
  if (!options.mock_script.empty()) {
    // Scripted failures are instantaneous; no point waiting between tries.
    config.gateway.backoff_base_ms = 0;
  }
  auto transport = make_transport(options, config);
  return psi::Pipeline(std::move(config), std::move(transport), options.force);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"principle-guided instruction dataset synthesis"};
  app.require_subcommand(1);

  CliOptions options;
  app.add_option("--config", options.config_path, "JSON config file");
  app.add_option("--mock", options.mock_script,
                 "scripted mock transport for offline runs");
  app.add_option("--seed-file", options.seed_file, "seed dataset (JSONL/array)");
  app.add_option("--knowledge", options.knowledge_dir,
                 "directory of knowledge snippets (generator-only)");
  app.add_option("--out", options.output_dir, "output directory");
  app.add_option("--templates", options.templates_dir,
                 "directory of prompt template overrides");
  app.add_option("--rng-seed", options.rng_seed, "RNG seed");
  app.add_flag("--force", options.force, "re-run completed stages");

  auto* cmd_expand = app.add_subcommand("expand", "seed -> initial dataset");
  cmd_expand->add_option("--target-initial", options.target_initial,
                         "initial dataset size");
  cmd_expand->add_option("--tasks-per-request", options.tasks_per_request,
                         "tasks requested per prompt");

  auto* cmd_principles =
      app.add_subcommand("principles", "initial dataset -> principle pool");
  cmd_principles->add_option("--T", options.t, "number of subsets");
  cmd_principles->add_option("--subset-size", options.subset_size,
                             "instances per subset");
  cmd_principles->add_flag("--wo-initial", options.wo_initial,
                           "reflect over the seed instead of the initial set");
  cmd_principles->add_flag("--wo-sample", options.wo_sample,
                           "single reflection over a truncated initial set");
  cmd_principles->add_flag("--wo-cluster", options.wo_cluster,
                           "promote low-level principles verbatim");

  auto* cmd_generate =
      app.add_subcommand("generate", "principle pool -> final dataset");
  cmd_generate->add_option("--pool", options.pool_path, "principle pool file");
  cmd_generate->add_option("--size", options.size, "final dataset size");
  cmd_generate->add_option("--tasks-per-request", options.tasks_per_request,
                           "tasks requested per prompt");
  cmd_generate->add_option("--dedup-threshold", options.dedup_threshold,
                           "ROUGE-L F1 near-duplicate threshold");
  cmd_generate->add_flag("--merge-seed", options.merge_seed,
                         "include the seed/initial instances in the output");

  auto* cmd_ablate = app.add_subcommand("ablate", "run an ablation family");
  cmd_ablate
      ->add_option("--mode", options.mode,
                   "wo-initial | wo-sample | wo-cluster | leave-one-out | "
                   "size-sweep")
      ->required();
  cmd_ablate->add_option("--pool", options.pool_path, "base principle pool");
  cmd_ablate->add_option("--index", options.index,
                         "single leave-one-out index (default: all)");
  cmd_ablate->add_option("--sizes", options.sizes,
                         "size-sweep targets")->delimiter(',');
  cmd_ablate->add_option("--size", options.size,
                         "dataset size per leave-one-out run");

  auto* cmd_report = app.add_subcommand("report", "render the run report");
  cmd_report->add_option("--run-dir", options.run_dir,
                         "run directory (default: --out)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_expand->parsed()) {
      make_pipeline(options).run_expand();
      return kExitOk;
    }
    if (cmd_principles->parsed()) {
      psi::PrincipleVariant variant = psi::PrincipleVariant::Standard;
      if (options.wo_initial) variant = psi::PrincipleVariant::WoInitial;
      if (options.wo_sample) variant = psi::PrincipleVariant::WoSample;
      if (options.wo_cluster) variant = psi::PrincipleVariant::WoCluster;
      make_pipeline(options).run_principles(variant);
      return kExitOk;
    }
    if (cmd_generate->parsed()) {
      psi::GenerateOptions generate;
      generate.pool_path = options.pool_path;
      if (options.size > 0) {
        generate.size_override = static_cast<std::size_t>(options.size);
      }
      generate.merge_seed = options.merge_seed;
      make_pipeline(options).run_generate(generate);
      return kExitOk;
    }
    if (cmd_ablate->parsed()) {
      psi::AblationSpec spec;
      if (options.mode == "wo-initial") {
        spec.mode = psi::AblationSpec::Mode::WoInitial;
      } else if (options.mode == "wo-sample") {
        spec.mode = psi::AblationSpec::Mode::WoSample;
      } else if (options.mode == "wo-cluster") {
        spec.mode = psi::AblationSpec::Mode::WoCluster;
      } else if (options.mode == "leave-one-out") {
        spec.mode = psi::AblationSpec::Mode::LeaveOneOut;
      } else if (options.mode == "size-sweep") {
        spec.mode = psi::AblationSpec::Mode::SizeSweep;
      } else {
        std::cerr << "unknown ablation mode: " << options.mode << "\n";
        return kExitConfig;
      }
      spec.leave_out_index = static_cast<int>(options.index);
      spec.sizes = options.sizes;
      spec.pool_path = options.pool_path;
      psi::Pipeline pipeline = make_pipeline(options);
      for (const auto& artifact : pipeline.run_ablate(spec)) {
        std::cout << artifact << "\n";
      }
      return kExitOk;
    }
    if (cmd_report->parsed()) {
      std::string dir = options.run_dir;
      if (dir.empty()) dir = effective_config(options).output_dir;
      std::cout << psi::run_report(dir);
      return kExitOk;
    }
  } catch (const psi::Error& e) {
    std::cerr << "error (" << psi::to_string(e.kind()) << "): " << e.what()
              << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitConfig;
}
