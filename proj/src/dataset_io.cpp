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

#include "psi/dataset_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace psi {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

TaskInstance instance_from_json(const json& object, DatasetLabel label,
                                std::size_t position) {
  if (!object.is_object()) {
    throw Error(ErrorKind::Schema, "dataset entry " + std::to_string(position) +
                                       " is not a JSON object");
  }
  if (!object.contains("instruction")) {
    throw Error(ErrorKind::Schema, "dataset entry " + std::to_string(position) +
                                       " is missing \"instruction\"");
  }
  TaskInstance instance;
  instance.instruction = object.at("instruction").get<std::string>();
  if (object.contains("input") && !object.at("input").is_null()) {
    instance.input = normalize_input(object.at("input").get<std::string>());
  }
  if (object.contains("output") && !object.at("output").is_null()) {
    instance.output = object.at("output").get<std::string>();
  }
  switch (label) {
    case DatasetLabel::Seed:
      instance.origin = Origin::Seed;
      break;
    case DatasetLabel::Initial:
      instance.origin = Origin::InitialExpansion;
      break;
    case DatasetLabel::Final:
      instance.origin = Origin::Generated;
      // Files without a sidecar keep provenance at line granularity.
      instance.source_request_id = "file#" + std::to_string(position);
      break;
  }
  instance.validate();
  return instance;
}

ordered_json instance_to_json(const TaskInstance& instance) {
  ordered_json object;
  object["instruction"] = instance.instruction;
  object["input"] = instance.input;
  object["output"] = instance.output;
  return object;
}

}  // namespace

Dataset parse_instances_file(std::string_view bytes,
                             DatasetLabel expected_label) {
  Dataset dataset;
  dataset.label = expected_label;

  std::string text(bytes);
  std::string trimmed = trim_copy(text);
  if (trimmed.empty()) {
    throw Error(ErrorKind::EmptyDataset, "dataset file is empty");
  }

  if (trimmed.front() == '[') {
    json array;
    try {
      array = json::parse(trimmed);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse,
                  std::string("dataset array parse error: ") + e.what());
    }
    if (!array.is_array()) {
      throw Error(ErrorKind::Schema, "top-level JSON value is not an array");
    }
    for (std::size_t i = 0; i < array.size(); ++i) {
      dataset.items.push_back(instance_from_json(array[i], expected_label, i));
    }
  } else {
    std::istringstream stream(text);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(stream, line)) {
      ++line_number;
      if (trim_copy(line).empty()) continue;
      json object;
      try {
        object = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_number) +
                                          ": " + e.what());
      }
      dataset.items.push_back(
          instance_from_json(object, expected_label, dataset.items.size()));
    }
  }

  if (dataset.items.empty()) {
    throw Error(ErrorKind::EmptyDataset, "dataset contains no instances");
  }
  return dataset;
}

std::string serialize_dataset(const Dataset& dataset) {
  std::string out;
  for (const auto& instance : dataset.items) {
    out += instance_to_json(instance).dump();
    out += '\n';
  }
  return out;
}

std::string serialize_dataset_metadata(const Dataset& dataset) {
  ordered_json meta;
  meta["label"] = to_string(dataset.label);
  ordered_json records = ordered_json::array();
  for (const auto& instance : dataset.items) {
    ordered_json record;
    record["origin"] = to_string(instance.origin);
    record["source_request_id"] = instance.source_request_id;
    records.push_back(std::move(record));
  }
  meta["instances"] = std::move(records);
  return meta.dump(2) + "\n";
}

void apply_dataset_metadata(Dataset& dataset, std::string_view sidecar_bytes) {
  json meta;
  try {
    meta = json::parse(sidecar_bytes);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("sidecar parse error: ") + e.what());
  }
  if (meta.contains("label")) {
    dataset.label = label_from_string(meta.at("label").get<std::string>());
  }
  const auto& records = meta.at("instances");
  if (records.size() != dataset.items.size()) {
    throw Error(ErrorKind::Integrity,
                "sidecar record count does not match the dataset");
  }
  for (std::size_t i = 0; i < dataset.items.size(); ++i) {
    dataset.items[i].origin =
        origin_from_string(records[i].at("origin").get<std::string>());
    dataset.items[i].source_request_id =
        records[i].at("source_request_id").get<std::string>();
  }
}

std::string save_pool(const PrinciplePool& pool) {
  pool.validate();
  ordered_json out;
  ordered_json low = ordered_json::array();
  for (const auto& principle : pool.low_level) {
    ordered_json p;
    p["text"] = principle.text;
    p["reasoning_excerpt"] = principle.reasoning_excerpt;
    p["subset_index"] = principle.subset_index;
    if (!principle.embedding.empty()) p["embedding"] = principle.embedding;
    low.push_back(std::move(p));
  }
  out["low_level"] = std::move(low);
  ordered_json clusters = ordered_json::array();
  for (const auto& cluster : pool.clusters) {
    ordered_json c;
    c["member_indices"] = cluster.member_indices;
    c["centroid"] = cluster.centroid;
    clusters.push_back(std::move(c));
  }
  out["clusters"] = std::move(clusters);
  ordered_json high = ordered_json::array();
  for (const auto& principle : pool.high_level) {
    ordered_json h;
    h["text"] = principle.text;
    h["cluster_index"] = principle.cluster_index;
    high.push_back(std::move(h));
  }
  out["high_level"] = std::move(high);
  out["N"] = pool.n;
  return out.dump(2) + "\n";
}

PrinciplePool load_pool(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("pool parse error: ") + e.what());
  }
  PrinciplePool pool;
  if (doc.contains("low_level")) {
    for (const auto& p : doc.at("low_level")) {
      LowLevelPrinciple principle;
      principle.text = p.at("text").get<std::string>();
      principle.reasoning_excerpt =
          p.value("reasoning_excerpt", std::string{});
      principle.subset_index = p.value("subset_index", 0);
      if (p.contains("embedding")) {
        principle.embedding = p.at("embedding").get<std::vector<double>>();
      }
      pool.low_level.push_back(std::move(principle));
    }
  }
  if (doc.contains("clusters")) {
    for (const auto& c : doc.at("clusters")) {
      PrincipleCluster cluster;
      cluster.member_indices =
          c.at("member_indices").get<std::vector<std::size_t>>();
      if (c.contains("centroid")) {
        cluster.centroid = c.at("centroid").get<std::vector<double>>();
      }
      pool.clusters.push_back(std::move(cluster));
    }
  }
  if (!doc.contains("high_level")) {
    throw Error(ErrorKind::Schema, "pool file has no high_level list");
  }
  int index = 0;
  for (const auto& h : doc.at("high_level")) {
    HighLevelPrinciple principle;
    if (h.is_string()) {
      principle.text = h.get<std::string>();
      principle.cluster_index = index;
    } else {
      principle.text = h.at("text").get<std::string>();
      principle.cluster_index = h.value("cluster_index", index);
    }
    pool.high_level.push_back(std::move(principle));
    ++index;
  }
  pool.n = doc.contains("N") ? doc.at("N").get<std::size_t>()
                             : pool.high_level.size();
  pool.validate();
  return pool;
}

std::vector<KnowledgeSnippet> load_knowledge_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw Error(ErrorKind::Config, "knowledge directory not found: " + dir);
  }
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());

  std::vector<KnowledgeSnippet> snippets;
  for (const auto& path : paths) {
    std::string bytes = read_file(path.string());
    if (path.extension() == ".json") {
      json doc = json::parse(bytes);
      auto add = [&](const json& node) {
        KnowledgeSnippet snippet;
        snippet.id = node.value("id", path.filename().string());
        snippet.body = node.at("body").get<std::string>();
        if (node.contains("tags")) {
          snippet.tags = node.at("tags").get<std::vector<std::string>>();
        }
        if (trim_copy(snippet.body).empty()) {
          throw Error(ErrorKind::Schema,
                      "knowledge snippet with empty body: " + snippet.id);
        }
        snippets.push_back(std::move(snippet));
      };
      if (doc.is_array()) {
        for (const auto& node : doc) add(node);
      } else {
        add(doc);
      }
    } else {
      KnowledgeSnippet snippet;
      snippet.id = path.filename().string();
      snippet.body = trim_copy(bytes);
      if (snippet.body.empty()) {
        throw Error(ErrorKind::Schema,
                    "knowledge file is empty: " + path.string());
      }
      snippets.push_back(std::move(snippet));
    }
  }
  return snippets;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Config, "cannot open file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::Config, "cannot write file: " + path);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Dataset load_dataset_file(const std::string& path, DatasetLabel expected_label) {
  Dataset dataset = parse_instances_file(read_file(path), expected_label);
  std::string sidecar = path + ".meta.json";
  if (std::filesystem::exists(sidecar)) {
    apply_dataset_metadata(dataset, read_file(sidecar));
  }
  return dataset;
}

void save_dataset_file(const std::string& path, const Dataset& dataset,
                       bool with_sidecar) {
  write_file(path, serialize_dataset(dataset));
  if (with_sidecar) {
    write_file(path + ".meta.json", serialize_dataset_metadata(dataset));
  }
}

}  // namespace psi
