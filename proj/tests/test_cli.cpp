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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "psi/config.hpp"
#include "psi/dataset_io.hpp"
#include "psi/manifest.hpp"
#include "test_helpers.hpp"

using namespace psi;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log =
      fs::temp_directory_path() / ("psi_cli_log_" + std::to_string(counter++));
  const std::string command =
      std::string(PSI_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(command.c_str());
  CliResult result;
  result.code = WEXITSTATUS(status);
  result.output = read_file(log.string());
  fs::remove(log);
  return result;
}

/// Fresh scratch directory seeded with the seed file and the mock script.
fs::path make_run_dir(const std::string& name,
                      std::size_t generation_batches = 4) {
  const fs::path dir = fs::temp_directory_path() / ("psi_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_file((dir / "seed.jsonl").string(),
             serialize_dataset(psi::testing::small_seed(8)));
  write_file((dir / "mock.json").string(),
             psi::testing::full_pipeline_script(20, generation_batches).dump(2));
  return dir;
}

std::string common_flags(const fs::path& dir) {
  return "--mock " + (dir / "mock.json").string() + " --seed-file " +
         (dir / "seed.jsonl").string() + " --out " + (dir / "out").string() +
         " --rng-seed 11";
}

std::size_t line_count(const std::string& path) {
  const std::string bytes = read_file(path);
  return static_cast<std::size_t>(std::count(bytes.begin(), bytes.end(), '\n'));
}

}  // namespace

TEST_CASE("cli: expand writes the requested number of instances") {
  fs::path dir = make_run_dir("expand");
  CliResult result =
      run_cli(common_flags(dir) + " expand --target-initial 12");
  CHECK(result.code == 0);
  const std::string initial = (dir / "out" / "initial.jsonl").string();
  REQUIRE(fs::exists(initial));
  CHECK(line_count(initial) == 12);
  CHECK(fs::exists((dir / "out" / "manifest.json").string()));
}

TEST_CASE("cli: expand with target equal to the seed is the normalized seed") {
  fs::path dir = make_run_dir("expand_noop");
  CliResult result = run_cli(common_flags(dir) + " expand --target-initial 8");
  CHECK(result.code == 0);
  Dataset initial = load_dataset_file((dir / "out" / "initial.jsonl").string(),
                                      DatasetLabel::Initial);
  Dataset seed = parse_instances_file(read_file((dir / "seed.jsonl").string()),
                                      DatasetLabel::Seed);
  REQUIRE(initial.size() == seed.size());
  for (std::size_t i = 0; i < seed.size(); ++i) {
    CHECK(initial.items[i].instruction == seed.items[i].instruction);
  }
}

TEST_CASE("cli: missing seed file exits 2 and names the path") {
  fs::path dir = make_run_dir("no_seed");
  CliResult result = run_cli("--mock " + (dir / "mock.json").string() +
                             " --seed-file " + (dir / "absent.jsonl").string() +
                             " --out " + (dir / "out").string() + " expand");
  CHECK(result.code == 2);
  CHECK(result.output.find("absent.jsonl") != std::string::npos);
}

TEST_CASE("cli: expand is resumable and --force re-runs it") {
  fs::path dir = make_run_dir("resume");
  CHECK(run_cli(common_flags(dir) + " expand --target-initial 12").code == 0);
  const std::string initial = (dir / "out" / "initial.jsonl").string();
  const std::string bytes_before = read_file(initial);

  CliResult second = run_cli(common_flags(dir) + " expand --target-initial 12");
  CHECK(second.code == 0);
  CHECK(second.output.find("up to date") != std::string::npos);
  CHECK(read_file(initial) == bytes_before);

  CliResult forced =
      run_cli(common_flags(dir) + " --force expand --target-initial 12");
  CHECK(forced.code == 0);
  CHECK(forced.output.find("up to date") == std::string::npos);
}

TEST_CASE("cli: principles builds a pool from the initial dataset") {
  fs::path dir = make_run_dir("principles");
  REQUIRE(run_cli(common_flags(dir) + " expand --target-initial 12").code == 0);
  CliResult result =
      run_cli(common_flags(dir) + " principles --T 6 --subset-size 3");
  CHECK(result.code == 0);
  PrinciplePool pool =
      load_pool(read_file((dir / "out" / "pool.json").string()));
  CHECK(pool.low_level.size() == 18);  // 6 reflections x 3 insights
  CHECK(pool.n == 2);
  CHECK(result.output.find("N=2") != std::string::npos);
}

TEST_CASE("cli: principles without the initial stage exits 2") {
  fs::path dir = make_run_dir("principles_missing");
  CliResult result = run_cli(common_flags(dir) + " principles");
  CHECK(result.code == 2);
  CHECK(result.output.find("initial") != std::string::npos);
}

TEST_CASE("cli: --wo-initial reflects straight over the seed") {
  fs::path dir = make_run_dir("wo_initial");
  // No expand run: the flag must not require initial.jsonl.
  CliResult result = run_cli(common_flags(dir) +
                             " principles --wo-initial --T 4 --subset-size 3");
  CHECK(result.code == 0);
  CHECK(fs::exists((dir / "out" / "pool.json").string()));
}

TEST_CASE("cli: --wo-cluster promotes low-level principles verbatim") {
  fs::path dir = make_run_dir("wo_cluster");
  REQUIRE(run_cli(common_flags(dir) + " expand --target-initial 12").code == 0);
  CliResult result = run_cli(common_flags(dir) +
                             " principles --wo-cluster --T 5 --subset-size 3");
  CHECK(result.code == 0);
  PrinciplePool pool =
      load_pool(read_file((dir / "out" / "pool.json").string()));
  CHECK(pool.n == pool.low_level.size());
  for (std::size_t i = 0; i < pool.n; ++i) {
    CHECK(pool.high_level[i].text == pool.low_level[i].text);
  }
}

TEST_CASE("cli: generate produces the dataset, sidecar, and report") {
  fs::path dir = make_run_dir("generate");
  REQUIRE(run_cli(common_flags(dir) + " expand --target-initial 12").code == 0);
  REQUIRE(run_cli(common_flags(dir) + " principles --T 6 --subset-size 3")
              .code == 0);
  CliResult result = run_cli(common_flags(dir) + " generate --size 60");
  CHECK(result.code == 0);
  const fs::path out = dir / "out";
  CHECK(line_count((out / "dataset.jsonl").string()) == 60);
  CHECK(fs::exists(out / "dataset.jsonl.meta.json"));
  CHECK(fs::exists(out / "rejections.csv"));
  CHECK(fs::exists(out / "report.txt"));
  CHECK(fs::exists(out / "report.json"));
  const std::string report = read_file((out / "report.txt").string());
  CHECK(report.find("Token usage") != std::string::npos);
  CHECK(report.find("lower bounds") != std::string::npos);
}

TEST_CASE("cli: size flag plumbs through proportionally") {
  fs::path dir = make_run_dir("sizes", /*generation_batches=*/6);
  REQUIRE(run_cli(common_flags(dir) + " expand --target-initial 12").code == 0);
  REQUIRE(run_cli(common_flags(dir) + " principles --T 6 --subset-size 3")
              .code == 0);
  REQUIRE(run_cli(common_flags(dir) + " generate --size 40").code == 0);
  CHECK(line_count((dir / "out" / "dataset.jsonl").string()) == 40);
  REQUIRE(run_cli(common_flags(dir) + " --force generate --size 100").code == 0);
  CHECK(line_count((dir / "out" / "dataset.jsonl").string()) == 100);
}

TEST_CASE("cli: generation shortfall exits 3 and persists the partial") {
  fs::path dir = make_run_dir("shortfall");
  // A script whose generator repeats one batch: dedup saturates at 20.
  nlohmann::json script = psi::testing::full_pipeline_script(20, 1);
  write_file((dir / "mock.json").string(), script.dump());
  REQUIRE(run_cli(common_flags(dir) + " expand --target-initial 12").code == 0);
  REQUIRE(run_cli(common_flags(dir) + " principles --T 6 --subset-size 3")
              .code == 0);
  CliResult result = run_cli(common_flags(dir) + " generate --size 60");
  CHECK(result.code == 3);
  CHECK(line_count((dir / "out" / "dataset.jsonl").string()) == 20);
}

TEST_CASE("cli: generate with knowledge keeps the reflector out of the loop") {
  fs::path dir = make_run_dir("knowledge");
  fs::create_directories(dir / "knowledge");
  write_file((dir / "knowledge" / "note.txt").string(),
             "internal troubleshooting runbook entry 17");
  REQUIRE(run_cli(common_flags(dir) + " expand --target-initial 12").code == 0);
  REQUIRE(run_cli(common_flags(dir) + " principles --T 6 --subset-size 3")
              .code == 0);

  const std::string ledger_before =
      read_file((dir / "out" / "ledger.csv").string());
  CliResult result = run_cli(common_flags(dir) + " --knowledge " +
                             (dir / "knowledge").string() +
                             " generate --size 60");
  CHECK(result.code == 0);
  // No reflector rows were appended by the generate command.
  UsageLedger before;
  before.load_csv(ledger_before);
  UsageLedger after;
  after.load_csv(read_file((dir / "out" / "ledger.csv").string()));
  CHECK(before.request_count(Role::Reflector) ==
        after.request_count(Role::Reflector));
  CHECK(after.request_count(Role::Generator) >
        before.request_count(Role::Generator));
}

TEST_CASE("cli: ablate leave-one-out emits one dataset per principle") {
  fs::path dir = make_run_dir("ablate_loo", /*generation_batches=*/6);
  REQUIRE(run_cli(common_flags(dir) + " expand --target-initial 12").code == 0);
  REQUIRE(run_cli(common_flags(dir) + " principles --T 6 --subset-size 3")
              .code == 0);
  CliResult result =
      run_cli(common_flags(dir) + " ablate --mode leave-one-out --size 20");
  CHECK(result.code == 0);
  PrinciplePool pool =
      load_pool(read_file((dir / "out" / "pool.json").string()));
  for (std::size_t i = 0; i < pool.n; ++i) {
    const fs::path dataset =
        dir / "out" / ("ablate/leave_out_" + std::to_string(i)) /
        "dataset.jsonl";
    CHECK(fs::exists(dataset));
    CHECK(line_count(dataset.string()) == 20);
  }
}

TEST_CASE("cli: ablate size-sweep reuses one pool across sizes") {
  fs::path dir = make_run_dir("ablate_sweep", /*generation_batches=*/6);
  REQUIRE(run_cli(common_flags(dir) + " expand --target-initial 12").code == 0);
  REQUIRE(run_cli(common_flags(dir) + " principles --T 6 --subset-size 3")
              .code == 0);
  const std::string pool_before =
      read_file((dir / "out" / "pool.json").string());
  CliResult result = run_cli(common_flags(dir) +
                             " ablate --mode size-sweep --sizes 20,40,60");
  CHECK(result.code == 0);
  for (std::size_t size : {20u, 40u, 60u}) {
    const fs::path dataset =
        dir / "out" / ("ablate/size_" + std::to_string(size)) / "dataset.jsonl";
    REQUIRE(fs::exists(dataset));
    CHECK(line_count(dataset.string()) == size);
  }
  CHECK(read_file((dir / "out" / "pool.json").string()) == pool_before);
}

TEST_CASE("cli: ablate wo-sample runs exactly one reflection") {
  fs::path dir = make_run_dir("ablate_wo_sample");
  REQUIRE(run_cli(common_flags(dir) + " expand --target-initial 12").code == 0);
  const std::string ledger_path = (dir / "out" / "ledger.csv").string();
  UsageLedger before;
  before.load_csv(read_file(ledger_path));
  CHECK(run_cli(common_flags(dir) + " ablate --mode wo-sample").code == 0);
  UsageLedger after;
  after.load_csv(read_file(ledger_path));

  std::size_t reflections = 0;
  for (const auto& record : after.snapshot()) {
    if (record.request_id.rfind("reflect-", 0) == 0) ++reflections;
  }
  CHECK(reflections == 1);
  CHECK(fs::exists(dir / "out" / "ablate" / "wo_sample" / "pool.json"));
}

TEST_CASE("cli: report renders after a run and fails cleanly without one") {
  fs::path dir = make_run_dir("report", 6);
  REQUIRE(run_cli(common_flags(dir) + " expand --target-initial 12").code == 0);
  REQUIRE(run_cli(common_flags(dir) + " principles --T 6 --subset-size 3")
              .code == 0);
  REQUIRE(run_cli(common_flags(dir) + " generate --size 40").code == 0);

  CliResult result =
      run_cli("report --run-dir " + (dir / "out").string());
  CHECK(result.code == 0);
  CHECK(result.output.find("Token usage") != std::string::npos);
  CHECK(result.output.find("kgCO2e") != std::string::npos);

  // Idempotent re-render.
  CliResult again = run_cli("report --run-dir " + (dir / "out").string());
  CHECK(again.output == result.output);

  CliResult missing =
      run_cli("report --run-dir " + (dir / "definitely_absent").string());
  CHECK(missing.code == 2);
}

TEST_CASE("cli: config file values are overridden by flags") {
  fs::path dir = make_run_dir("config");
  PipelineConfig file_config;
  file_config.seed_file = (dir / "seed.jsonl").string();
  file_config.output_dir = (dir / "out").string();
  file_config.target_initial_size = 12;
  file_config.rng_seed = 1;
  write_file((dir / "config.json").string(), file_config.to_json());

  CliResult result = run_cli("--config " + (dir / "config.json").string() +
                             " --mock " + (dir / "mock.json").string() +
                             " --rng-seed 2 expand");
  CHECK(result.code == 0);
  PipelineConfig effective = PipelineConfig::from_json(
      read_file((dir / "out" / "config.json").string()));
  CHECK(effective.rng_seed == 2);                 // flag wins
  CHECK(effective.target_initial_size == 12);     // file value preserved
}

TEST_CASE("config json round trip preserves every field") {
  PipelineConfig config;
  config.t = 7;
  config.subset_size = 4;
  config.target_dataset_size = 1234;
  config.dedup_threshold = 0.61;
  config.cluster_tau = 0.2;
  config.reflector.base_url = "http://example:8000";
  config.generator.model = "test-model";
  config.rng_seed = 99;
  config.gpu_hours = 7.5;
  PipelineConfig reparsed = PipelineConfig::from_json(config.to_json());
  CHECK(reparsed.to_json() == config.to_json());
  CHECK(reparsed.hash() == config.hash());
}

TEST_CASE("defaults match the published hyperparameters") {
  PipelineConfig config;
  CHECK(config.t == 10);
  CHECK(config.subset_size == 10);
  CHECK(config.target_dataset_size == 20000);
  CHECK(config.tasks_per_request == 20);
  CHECK(config.dedup_threshold == 0.7);
  CHECK(config.carbon_intensity == 0.24);
  CHECK(config.wh_per_request == 2.9);
}
