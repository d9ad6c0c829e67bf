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

#include <memory>
#include <string>
#include <vector>

#include "psi/config.hpp"
#include "psi/manifest.hpp"
#include "psi/principle_builder.hpp"

namespace psi {

/// File layout of one run directory; stage files are the inter-command
/// contract, there is no hidden state.
struct RunPaths {
  std::string dir;

  std::string initial_file() const { return dir + "/initial.jsonl"; }
  std::string pool_file() const { return dir + "/pool.json"; }
  std::string dataset_file() const { return dir + "/dataset.jsonl"; }
  std::string manifest_file() const { return dir + "/manifest.json"; }
  std::string ledger_file() const { return dir + "/ledger.csv"; }
  std::string config_file() const { return dir + "/config.json"; }
  std::string report_text_file() const { return dir + "/report.txt"; }
  std::string report_json_file() const { return dir + "/report.json"; }
  std::string rejections_file() const { return dir + "/rejections.csv"; }
};

enum class PrincipleVariant { Standard, WoInitial, WoSample, WoCluster };

const char* to_string(PrincipleVariant variant);

struct AblationSpec {
  enum class Mode { WoInitial, WoSample, WoCluster, LeaveOneOut, SizeSweep };
  Mode mode = Mode::LeaveOneOut;
  int leave_out_index = -1;        // -1 = every principle in turn
  std::vector<std::size_t> sizes;  // SizeSweep targets
  std::string pool_path;           // base pool override
};

struct GenerateOptions {
  std::string pool_path;        // default: <out>/pool.json
  std::size_t size_override = 0;
  int leave_out_index = -1;
  std::string out_subdir;       // write under <out>/<subdir>/ when set
  bool merge_seed = false;      // prepend the in-context dataset to D_t
};

/// Stage orchestration over one output directory. Commands are resumable:
/// re-running a stage whose output file matches the manifest digest under
/// an identical config hash is a no-op unless forced.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::unique_ptr<Transport> transport,
           bool force = false);

  /// Seed expansion; writes initial.jsonl (+sidecar) and returns its path.
  std::string run_expand();

  /// Multi-level principle construction; writes pool.json.
  std::string run_principles(PrincipleVariant variant = PrincipleVariant::Standard);

  /// Principle-guided generation; writes dataset.jsonl, the rejection log,
  /// and the run report. Persists any partial output before rethrowing a
  /// ShortfallError.
  std::string run_generate(const GenerateOptions& options = {});

  /// The ablation families; returns the artifact paths produced.
  std::vector<std::string> run_ablate(const AblationSpec& spec);

  LmGateway& gateway() { return *gateway_; }
  const std::shared_ptr<UsageLedger>& ledger() const { return ledger_; }
  const RunManifest& manifest() const { return manifest_; }
  const RunPaths& paths() const { return paths_; }
  const PipelineConfig& config() const { return config_; }

 private:
  PromptTemplate template_for(TemplateKind kind) const;
  std::string build_pool_into(PrincipleVariant variant,
                              const std::string& out_path);
  bool stage_current(const std::string& stage, const std::string& path) const;
  void finish_stage(const std::string& stage, const std::string& path);
  void save_state();
  Dataset load_reflection_input(PrincipleVariant variant) const;
  Dataset load_in_context_source() const;
  std::string generate_into(const RunPaths& out, const PrinciplePool& pool,
                            std::size_t target, const std::string& stage,
                            bool merge_seed = false);
  void write_report_files(const RunPaths& out, const std::string& dataset_path);

  PipelineConfig config_;
  std::string config_hash_;
  RunPaths paths_;
  std::shared_ptr<UsageLedger> ledger_;
  std::unique_ptr<LmGateway> gateway_;
  std::vector<KnowledgeSnippet> knowledge_;
  RunManifest manifest_;
  bool force_ = false;
};

/// Renders (and rewrites) the report for a completed run directory;
/// idempotent. Throws Error(Config) when the manifest is missing.
std::string run_report(const std::string& run_dir);

}  // namespace psi
