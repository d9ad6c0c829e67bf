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

#include "psi/types.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace psi {

namespace {

bool contains_ci(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return false;
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(),
                        needle.end(), [](char a, char b) {
                          return std::tolower(static_cast<unsigned char>(a)) ==
                                 std::tolower(static_cast<unsigned char>(b));
                        });
  return it != haystack.end();
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::EmptyDataset: return "empty_dataset";
    case ErrorKind::Integrity: return "integrity";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Gateway: return "gateway";
    case ErrorKind::Config: return "config";
    case ErrorKind::Privacy: return "privacy";
    case ErrorKind::Shortfall: return "shortfall";
    case ErrorKind::Fitting: return "fitting";
    case ErrorKind::Render: return "render";
    case ErrorKind::Reflection: return "reflection";
    case ErrorKind::Summarization: return "summarization";
    case ErrorKind::Stage: return "stage";
  }
  return "error";
}

const char* to_string(Origin origin) {
  switch (origin) {
    case Origin::Seed: return "seed";
    case Origin::InitialExpansion: return "initial_expansion";
    case Origin::Generated: return "generated";
  }
  return "seed";
}

Origin origin_from_string(const std::string& name) {
  if (name == "seed") return Origin::Seed;
  if (name == "initial_expansion") return Origin::InitialExpansion;
  if (name == "generated") return Origin::Generated;
  throw Error(ErrorKind::Schema, "unknown origin: " + name);
}

const char* to_string(DatasetLabel label) {
  switch (label) {
    case DatasetLabel::Seed: return "seed";
    case DatasetLabel::Initial: return "initial";
    case DatasetLabel::Final: return "final";
  }
  return "seed";
}

DatasetLabel label_from_string(const std::string& name) {
  if (name == "seed") return DatasetLabel::Seed;
  if (name == "initial") return DatasetLabel::Initial;
  if (name == "final") return DatasetLabel::Final;
  throw Error(ErrorKind::Schema, "unknown dataset label: " + name);
}

std::string trim_copy(const std::string& text) {
  auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

std::string normalize_input(const std::string& raw) {
  std::string value = raw;
  // Strip every occurrence of the sentinel, case-insensitively.
  const std::string sentinel = kNoInputSentinel;
  while (contains_ci(value, sentinel)) {
    auto it = std::search(value.begin(), value.end(), sentinel.begin(),
                          sentinel.end(), [](char a, char b) {
                            return std::tolower(static_cast<unsigned char>(a)) ==
                                   std::tolower(static_cast<unsigned char>(b));
                          });
    value.erase(it, it + static_cast<std::ptrdiff_t>(sentinel.size()));
  }
  std::string trimmed = trim_copy(value);
  return trimmed;
}

void TaskInstance::validate() const {
  if (trim_copy(instruction).empty()) {
    throw Error(ErrorKind::Schema, "instruction is empty");
  }
  if (origin == Origin::Generated && source_request_id.empty()) {
    throw Error(ErrorKind::Schema,
                "generated instance lacks a source_request_id");
  }
  if (contains_ci(input, kNoInputSentinel)) {
    throw Error(ErrorKind::Schema, "input still carries the no-input sentinel");
  }
}

void Dataset::validate() const {
  for (const auto& item : items) {
    item.validate();
    if (label == DatasetLabel::Seed && item.origin != Origin::Seed) {
      throw Error(ErrorKind::Schema,
                  "seed dataset contains a non-seed instance");
    }
  }
}

void PrinciplePool::validate() const {
  if (n == 0) {
    throw Error(ErrorKind::Integrity, "principle pool has N = 0");
  }
  if (n != high_level.size()) {
    throw Error(ErrorKind::Integrity,
                "pool N does not match the high-level principle count");
  }
  // Manually written pools carry only high-level texts; a learned pool must
  // keep one cluster per high-level principle.
  if ((!clusters.empty() || !low_level.empty()) && n != clusters.size()) {
    throw Error(ErrorKind::Integrity,
                "pool N does not match the cluster count");
  }
  std::set<std::size_t> covered;
  for (const auto& cluster : clusters) {
    if (cluster.member_indices.empty()) {
      throw Error(ErrorKind::Integrity, "cluster with no members");
    }
    for (std::size_t index : cluster.member_indices) {
      if (index >= low_level.size()) {
        throw Error(ErrorKind::Integrity, "cluster member index out of range");
      }
      covered.insert(index);
    }
  }
  if (!low_level.empty() && covered.size() != low_level.size()) {
    throw Error(ErrorKind::Integrity,
                "clusters do not cover every low-level principle");
  }
  for (const auto& high : high_level) {
    if (trim_copy(high.text).empty()) {
      throw Error(ErrorKind::Integrity, "empty high-level principle text");
    }
  }
}

PrinciplePool PrinciplePool::without_principle(std::size_t index) const {
  if (index >= n) {
    throw Error(ErrorKind::Precondition,
                "leave-one-out index exceeds pool size");
  }
  PrinciplePool out;
  if (clusters.empty()) {
    // Manual pool: only high-level texts to filter.
    for (std::size_t k = 0; k < high_level.size(); ++k) {
      if (k == index) continue;
      HighLevelPrinciple high = high_level[k];
      high.cluster_index = static_cast<int>(out.high_level.size());
      out.high_level.push_back(std::move(high));
    }
    out.n = out.high_level.size();
    return out;
  }
  // Low-level principles that only belonged to the removed cluster are
  // dropped too, so the coverage invariant keeps holding.
  std::set<std::size_t> kept_members;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    if (k == index) continue;
    kept_members.insert(clusters[k].member_indices.begin(),
                        clusters[k].member_indices.end());
  }
  std::vector<std::size_t> remap(low_level.size(), low_level.size());
  for (std::size_t old_index : kept_members) {
    remap[old_index] = out.low_level.size();
    out.low_level.push_back(low_level[old_index]);
  }
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    if (k == index) continue;
    PrincipleCluster cluster;
    cluster.centroid = clusters[k].centroid;
    for (std::size_t member : clusters[k].member_indices) {
      cluster.member_indices.push_back(remap[member]);
    }
    out.clusters.push_back(std::move(cluster));
    HighLevelPrinciple high = high_level[k];
    high.cluster_index = static_cast<int>(out.high_level.size());
    out.high_level.push_back(std::move(high));
  }
  out.n = out.high_level.size();
  return out;
}

}  // namespace psi
