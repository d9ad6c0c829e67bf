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

#include "psi/pipeline.hpp"

#include <filesystem>
#include <iostream>

#include "psi/dataset_io.hpp"
#include "psi/digest.hpp"

namespace psi {

namespace fs = std::filesystem;

const char* to_string(PrincipleVariant variant) {
  switch (variant) {
    case PrincipleVariant::Standard: return "standard";
    case PrincipleVariant::WoInitial: return "wo_initial";
    case PrincipleVariant::WoSample: return "wo_sample";
    case PrincipleVariant::WoCluster: return "wo_cluster";
  }
  return "standard";
}

Pipeline::Pipeline(PipelineConfig config, std::unique_ptr<Transport> transport,
                   bool force)
    : config_(std::move(config)), force_(force) {
  config_hash_ = config_.hash();
  paths_.dir = config_.output_dir;

  ledger_ = std::make_shared<UsageLedger>();
  if (fs::exists(paths_.ledger_file())) {
    ledger_->load_csv(read_file(paths_.ledger_file()));
  }

  gateway_ = std::make_unique<LmGateway>(std::move(transport), config_.gateway,
                                         ledger_);
  gateway_->set_endpoint(Role::Reflector, config_.reflector);
  gateway_->set_endpoint(Role::Generator, config_.generator);
  gateway_->set_endpoint(Role::Embedder, config_.embedder);

  if (!config_.knowledge_dir.empty()) {
    knowledge_ = load_knowledge_dir(config_.knowledge_dir);
    gateway_->register_private_knowledge(knowledge_);
  }

  if (fs::exists(paths_.manifest_file())) {
    manifest_ = RunManifest::from_json(read_file(paths_.manifest_file()));
    if (manifest_.config_hash != config_hash_) {
      // A changed config invalidates completed stages.
      manifest_.stage_outputs.clear();
      manifest_.timestamps.clear();
      manifest_.stage_stats.clear();
    }
  }
  manifest_.rng_seed = config_.rng_seed;
  manifest_.config_hash = config_hash_;
}

PromptTemplate Pipeline::template_for(TemplateKind kind) const {
  if (config_.templates_dir.empty()) {
    return PromptTemplate::builtin(kind);
  }
  const std::string path =
      config_.templates_dir + "/" + std::string(to_string(kind)) + ".txt";
  if (!fs::exists(path)) return PromptTemplate::builtin(kind);
  return PromptTemplate::from_file(kind, path);
}

bool Pipeline::stage_current(const std::string& stage,
                             const std::string& path) const {
  if (force_) return false;
  auto it = manifest_.stage_outputs.find(stage);
  if (it == manifest_.stage_outputs.end()) return false;
  if (!fs::exists(path)) return false;
  return file_digest(path) == it->second;
}

void Pipeline::finish_stage(const std::string& stage, const std::string& path) {
  manifest_.record_stage(stage, file_digest(path));
  save_state();
}

void Pipeline::save_state() {
  manifest_.usage_by_role = ledger_->totals_by_role();
  write_file(paths_.manifest_file(), manifest_.to_json());
  write_file(paths_.ledger_file(), ledger_->to_csv());
  write_file(paths_.config_file(), config_.to_json());
}

std::string Pipeline::run_expand() {
  if (config_.seed_file.empty() || !fs::exists(config_.seed_file)) {
    throw Error(ErrorKind::Config, "seed file not found: " + config_.seed_file);
  }
  const std::string out_path = paths_.initial_file();
  if (stage_current("initial", out_path)) {
    std::cerr << "[psi] initial dataset up to date: " << out_path << "\n";
    return out_path;
  }

  Dataset seed = parse_instances_file(read_file(config_.seed_file),
                                      DatasetLabel::Seed);

  ExpansionConfig expansion;
  expansion.target_size = config_.target_initial_size;
  expansion.tasks_per_request = config_.tasks_per_request;
  expansion.in_context_examples = config_.in_context_examples;
  expansion.temperature = config_.expansion_temperature;
  expansion.max_tokens = config_.max_completion_tokens;
  expansion.max_rounds = config_.max_expansion_rounds;

  Dataset initial;
  try {
    initial = expand_seed(*gateway_, seed, knowledge_,
                          template_for(TemplateKind::Expansion), expansion);
  } catch (const ShortfallError& e) {
    save_dataset_file(out_path, e.partial());
    save_state();
    throw;
  }

  save_dataset_file(out_path, initial);
  manifest_.stage_stats["expansion_requests"] =
      ledger_->request_count(Role::Generator);
  finish_stage("initial", out_path);
  std::cerr << "[psi] wrote " << initial.size() << " instances to " << out_path
            << "\n";
  return out_path;
}

Dataset Pipeline::load_reflection_input(PrincipleVariant variant) const {
  if (variant == PrincipleVariant::WoInitial) {
    // Reflect directly over the seed.
    if (config_.seed_file.empty() || !fs::exists(config_.seed_file)) {
      throw Error(ErrorKind::Config,
                  "seed file not found: " + config_.seed_file);
    }
    return parse_instances_file(read_file(config_.seed_file),
                                DatasetLabel::Seed);
  }
  const std::string path = paths_.initial_file();
  if (!fs::exists(path)) {
    throw Error(ErrorKind::Config,
                "initial dataset not found (run expand first): " + path);
  }
  return load_dataset_file(path, DatasetLabel::Initial);
}

std::string Pipeline::run_principles(PrincipleVariant variant) {
  return build_pool_into(variant, paths_.pool_file());
}

std::string Pipeline::build_pool_into(PrincipleVariant variant,
                                      const std::string& out_path) {
  std::string stage = "pool";
  if (variant != PrincipleVariant::Standard) {
    stage += std::string("[") + to_string(variant) + "]";
  }
  if (stage_current(stage, out_path)) {
    std::cerr << "[psi] principle pool up to date: " << out_path << "\n";
    return out_path;
  }

  Dataset input = load_reflection_input(variant);

  PoolBuildConfig build;
  build.t = config_.t;
  build.subset_size = config_.subset_size;
  build.rng_seed = config_.rng_seed;
  build.clustering.k_max = config_.cluster_k_max;
  build.clustering.tau = config_.cluster_tau;
  build.clustering.target_dim = config_.cluster_target_dim;
  build.clustering.n_init = config_.cluster_n_init;
  build.clustering.fit.variance_floor = config_.cluster_variance_floor;
  build.reflection.temperature = config_.reflection_temperature;
  build.reflection.max_tokens = config_.max_completion_tokens;
  build.summarization.temperature = config_.summarization_temperature;
  build.skip_clustering = variant == PrincipleVariant::WoCluster;
  build.single_reflection = variant == PrincipleVariant::WoSample;
  build.context_budget = config_.wo_sample_context_budget;

  PoolBuildStats stats;
  PrinciplePool pool =
      build_pool(*gateway_, input, template_for(TemplateKind::Reflection),
                 template_for(TemplateKind::Summarization), build, &stats);

  write_file(out_path, save_pool(pool));
  manifest_.stage_stats["reflections"] = stats.reflections;
  manifest_.stage_stats["low_level_principles"] = stats.low_level_count;
  manifest_.stage_stats["high_level_principles"] = pool.n;
  finish_stage(stage, out_path);
  std::cerr << "[psi] pool: T=" << stats.reflections
            << " |P^L|=" << stats.low_level_count << " N=" << pool.n << " -> "
            << out_path << "\n";
  return out_path;
}

Dataset Pipeline::load_in_context_source() const {
  if (fs::exists(paths_.initial_file())) {
    return load_dataset_file(paths_.initial_file(), DatasetLabel::Initial);
  }
  if (!config_.seed_file.empty() && fs::exists(config_.seed_file)) {
    return parse_instances_file(read_file(config_.seed_file),
                                DatasetLabel::Seed);
  }
  Dataset empty;
  empty.label = DatasetLabel::Initial;
  return empty;
}

std::string Pipeline::generate_into(const RunPaths& out,
                                    const PrinciplePool& pool,
                                    std::size_t target,
                                    const std::string& stage,
                                    bool merge_seed) {
  const std::string out_path = out.dataset_file();
  if (stage_current(stage, out_path)) {
    std::cerr << "[psi] dataset up to date: " << out_path << "\n";
    return out_path;
  }

  Dataset in_context = load_in_context_source();

  GenerationConfig generation;
  generation.target_size = target;
  generation.tasks_per_request = config_.tasks_per_request;
  generation.in_context_examples = config_.in_context_examples;
  generation.temperature = config_.generation_temperature;
  generation.dedup_threshold = config_.dedup_threshold;
  generation.max_tokens = config_.max_completion_tokens;
  generation.max_requests = config_.max_generation_requests;

  GenerationStats stats;
  Dataset dataset;
  try {
    dataset = generate_dataset(*gateway_, pool, knowledge_, in_context,
                               generation, template_for(TemplateKind::Generation),
                               &stats);
  } catch (const ShortfallError& e) {
    save_dataset_file(out_path, e.partial());
    write_file(out.rejections_file(), rejections_to_csv(stats.rejections));
    save_state();
    throw;
  }

  if (merge_seed) {
    // Merge flag: the generated instances follow the in-context dataset.
    Dataset merged;
    merged.label = DatasetLabel::Final;
    for (const auto& item : in_context.items) merged.items.push_back(item);
    for (auto& item : dataset.items) merged.items.push_back(std::move(item));
    dataset = std::move(merged);
  }

  save_dataset_file(out_path, dataset);
  write_file(out.rejections_file(), rejections_to_csv(stats.rejections));
  manifest_.stage_stats[stage + ".requests"] = stats.requests_issued;
  manifest_.stage_stats[stage + ".parsed"] = stats.parsed;
  manifest_.stage_stats[stage + ".validated"] = stats.validated;
  manifest_.stage_stats[stage + ".kept"] = stats.kept;
  finish_stage(stage, out_path);
  write_report_files(out, out_path);
  std::cerr << "[psi] wrote " << dataset.size() << " instances to " << out_path
            << " (requests=" << stats.requests_issued << ")\n";
  return out_path;
}

void Pipeline::write_report_files(const RunPaths& out,
                                  const std::string& dataset_path) {
  ReportInputs inputs;
  inputs.run_label = "psi";
  inputs.usage_by_role = ledger_->totals_by_role();
  CarbonEstimate run_estimate = psi_run_carbon(
      static_cast<double>(ledger_->request_count(Role::Reflector)),
      config_.wh_per_request, config_.gpu_watts, config_.gpu_hours,
      config_.carbon_intensity);
  inputs.estimates.push_back(run_estimate);
  if (config_.measured_kwh >= 0.0) {
    CarbonEstimate measured;
    measured.energy_kwh = config_.measured_kwh;
    measured.carbon_intensity = config_.carbon_intensity;
    measured.emissions_kg = measured.energy_kwh * measured.carbon_intensity;
    measured.method_label = "this run (measured)";
    inputs.estimates.push_back(measured);
  }
  if (fs::exists(dataset_path)) {
    Dataset dataset = load_dataset_file(dataset_path, DatasetLabel::Final);
    if (!dataset.empty()) inputs.lengths = length_stats(dataset);
  }
  write_file(out.report_text_file(), render_report(inputs));
  write_file(out.report_json_file(), render_report_json(inputs));
}

std::string Pipeline::run_generate(const GenerateOptions& options) {
  const std::string pool_path =
      options.pool_path.empty() ? paths_.pool_file() : options.pool_path;
  if (!fs::exists(pool_path)) {
    throw Error(ErrorKind::Config,
                "principle pool not found (run principles first): " + pool_path);
  }
  PrinciplePool pool = load_pool(read_file(pool_path));
  if (options.leave_out_index >= 0) {
    pool = pool.without_principle(
        static_cast<std::size_t>(options.leave_out_index));
  }

  RunPaths out = paths_;
  std::string stage = "dataset";
  if (!options.out_subdir.empty()) {
    out.dir = paths_.dir + "/" + options.out_subdir;
    stage += "[" + options.out_subdir + "]";
  }

  const std::size_t target = options.size_override > 0
                                 ? options.size_override
                                 : config_.target_dataset_size;
  return generate_into(out, pool, target, stage, options.merge_seed);
}

std::vector<std::string> Pipeline::run_ablate(const AblationSpec& spec) {
  std::vector<std::string> artifacts;
  switch (spec.mode) {
    case AblationSpec::Mode::WoInitial:
    case AblationSpec::Mode::WoSample:
    case AblationSpec::Mode::WoCluster: {
      PrincipleVariant variant = PrincipleVariant::WoInitial;
      if (spec.mode == AblationSpec::Mode::WoSample) {
        variant = PrincipleVariant::WoSample;
      } else if (spec.mode == AblationSpec::Mode::WoCluster) {
        variant = PrincipleVariant::WoCluster;
      }
      // The variant pool lands in its own subdirectory.
      const std::string out_path = paths_.dir + "/ablate/" +
                                   to_string(variant) + "/pool.json";
      artifacts.push_back(build_pool_into(variant, out_path));
      break;
    }
    case AblationSpec::Mode::LeaveOneOut: {
      const std::string pool_path =
          spec.pool_path.empty() ? paths_.pool_file() : spec.pool_path;
      if (!fs::exists(pool_path)) {
        throw Error(ErrorKind::Config,
                    "base pool required for leave-one-out: " + pool_path);
      }
      PrinciplePool pool = load_pool(read_file(pool_path));
      std::vector<int> indices;
      if (spec.leave_out_index >= 0) {
        indices.push_back(spec.leave_out_index);
      } else {
        for (std::size_t i = 0; i < pool.n; ++i) {
          indices.push_back(static_cast<int>(i));
        }
      }
      for (int index : indices) {
        GenerateOptions options;
        options.pool_path = pool_path;
        options.leave_out_index = index;
        options.out_subdir = "ablate/leave_out_" + std::to_string(index);
        artifacts.push_back(run_generate(options));
      }
      break;
    }
    case AblationSpec::Mode::SizeSweep: {
      if (spec.sizes.empty()) {
        throw Error(ErrorKind::Config, "size sweep needs at least one size");
      }
      const std::string pool_path =
          spec.pool_path.empty() ? paths_.pool_file() : spec.pool_path;
      if (!fs::exists(pool_path)) {
        throw Error(ErrorKind::Config,
                    "base pool required for the size sweep: " + pool_path);
      }
      // One pool reused across every size.
      for (std::size_t size : spec.sizes) {
        GenerateOptions options;
        options.pool_path = pool_path;
        options.size_override = size;
        options.out_subdir = "ablate/size_" + std::to_string(size);
        artifacts.push_back(run_generate(options));
      }
      break;
    }
  }
  return artifacts;
}

std::string run_report(const std::string& run_dir) {
  RunPaths paths;
  paths.dir = run_dir;
  if (!fs::exists(paths.manifest_file())) {
    throw Error(ErrorKind::Config,
                "manifest not found: " + paths.manifest_file());
  }
  RunManifest manifest = RunManifest::from_json(read_file(paths.manifest_file()));
  UsageLedger ledger;
  if (fs::exists(paths.ledger_file())) {
    ledger.load_csv(read_file(paths.ledger_file()));
  }
  PipelineConfig config;
  if (fs::exists(paths.config_file())) {
    config = PipelineConfig::from_json(read_file(paths.config_file()));
  }

  ReportInputs inputs;
  inputs.run_label = "psi";
  inputs.usage_by_role = ledger.totals_by_role();
  inputs.estimates.push_back(psi_run_carbon(
      static_cast<double>(ledger.request_count(Role::Reflector)),
      config.wh_per_request, config.gpu_watts, config.gpu_hours,
      config.carbon_intensity));
  if (config.measured_kwh >= 0.0) {
    CarbonEstimate measured;
    measured.energy_kwh = config.measured_kwh;
    measured.carbon_intensity = config.carbon_intensity;
    measured.emissions_kg = measured.energy_kwh * measured.carbon_intensity;
    measured.method_label = "this run (measured)";
    inputs.estimates.push_back(measured);
  }
  if (fs::exists(paths.dataset_file())) {
    Dataset dataset =
        load_dataset_file(paths.dataset_file(), DatasetLabel::Final);
    if (!dataset.empty()) inputs.lengths = length_stats(dataset);
  }

  const std::string text = render_report(inputs);
  write_file(paths.report_text_file(), text);
  write_file(paths.report_json_file(), render_report_json(inputs));
  return text;
}

}  // namespace psi
