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
#include <string_view>
#include <vector>

#include "psi/types.hpp"

namespace psi {

// Dataset files are UTF-8 in the instruction/input/output triple schema:
// either JSONL (one object per line) or a single JSON array. Provenance
// lives in a sidecar file so the emitted JSONL stays trainer-compatible.

/// Parses dataset bytes. Missing "input" and the no-input sentinel both
/// normalize to the empty string; ordering is preserved.
Dataset parse_instances_file(std::string_view bytes, DatasetLabel expected_label);

/// JSONL with keys exactly instruction/input/output, one line per instance.
/// parse(serialize(d)) == d for every normalized dataset.
std::string serialize_dataset(const Dataset& dataset);

/// Provenance sidecar: per-instance origin and source_request_id.
std::string serialize_dataset_metadata(const Dataset& dataset);
void apply_dataset_metadata(Dataset& dataset, std::string_view sidecar_bytes);

std::string save_pool(const PrinciplePool& pool);
PrinciplePool load_pool(std::string_view bytes);

/// Loads every file under `dir` as knowledge: *.json files hold one snippet
/// object (or an array of them), anything else is a body-only snippet whose
/// id is the file name. Files are visited in name order.
std::vector<KnowledgeSnippet> load_knowledge_dir(const std::string& dir);

// Small file helpers shared by the pipeline and the CLI.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

Dataset load_dataset_file(const std::string& path, DatasetLabel expected_label);
void save_dataset_file(const std::string& path, const Dataset& dataset,
                       bool with_sidecar = true);

}  // namespace psi
