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

#include "psi/accounting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

namespace psi {

namespace {

std::string with_thousands(std::uint64_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  int counter = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (counter != 0 && counter % 3 == 0) out.push_back(',');
    out.push_back(*it);
    ++counter;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string format_2dp(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::size_t token_count(const std::string& text) {
  std::istringstream stream(text);
  std::string token;
  std::size_t count = 0;
  while (stream >> token) ++count;
  return count;
}

}  // namespace

const char* to_string(Role role) {
  switch (role) {
    case Role::Reflector: return "reflector";
    case Role::Generator: return "generator";
    case Role::Embedder: return "embedder";
  }
  return "generator";
}

Role role_from_string(const std::string& name) {
  if (name == "reflector") return Role::Reflector;
  if (name == "generator") return Role::Generator;
  if (name == "embedder") return Role::Embedder;
  throw Error(ErrorKind::Schema, "unknown role: " + name);
}

void UsageLedger::append(UsageRecord record) {
  std::lock_guard<std::mutex> lock(mutex_);
  records_.push_back(std::move(record));
}

std::vector<UsageRecord> UsageLedger::snapshot() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return records_;
}

std::map<Role, TokenUsage> UsageLedger::totals_by_role() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::map<Role, TokenUsage> totals;
  for (const auto& record : records_) {
    totals[record.role] += record.usage;
  }
  return totals;
}

std::uint64_t UsageLedger::request_count(Role role) const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::uint64_t count = 0;
  for (const auto& record : records_) {
    if (record.role == role) ++count;
  }
  return count;
}

std::string UsageLedger::to_csv() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::string out = "role,request_id,prompt_tokens,completion_tokens,timestamp\n";
  for (const auto& record : records_) {
    out += to_string(record.role);
    out += ',';
    out += record.request_id;
    out += ',';
    out += std::to_string(record.usage.prompt_tokens);
    out += ',';
    out += std::to_string(record.usage.completion_tokens);
    out += ',';
    out += record.timestamp;
    out += '\n';
  }
  return out;
}

void UsageLedger::load_csv(std::string_view bytes) {
  std::istringstream stream{std::string(bytes)};
  std::string line;
  bool first = true;
  while (std::getline(stream, line)) {
    if (first) {  // header
      first = false;
      continue;
    }
    if (trim_copy(line).empty()) continue;
    std::vector<std::string> fields;
    std::istringstream fs(line);
    std::string field;
    while (std::getline(fs, field, ',')) fields.push_back(field);
    if (fields.size() < 4) {
      throw Error(ErrorKind::Parse, "bad ledger row: " + line);
    }
    UsageRecord record;
    record.role = role_from_string(fields[0]);
    record.request_id = fields[1];
    record.usage.prompt_tokens = std::stoull(fields[2]);
    record.usage.completion_tokens = std::stoull(fields[3]);
    if (fields.size() > 4) record.timestamp = fields[4];
    append(std::move(record));
  }
}

std::string CarbonEstimate::reported() const { return format_2dp(emissions_kg); }

CarbonEstimate carbon_from_requests(double n_requests, double wh_per_request,
                                    double carbon_intensity,
                                    std::string method_label) {
  if (n_requests < 0 || wh_per_request < 0) {
    throw Error(ErrorKind::Precondition, "negative carbon inputs");
  }
  CarbonEstimate estimate;
  estimate.energy_kwh = n_requests * wh_per_request / 1000.0;
  estimate.carbon_intensity = carbon_intensity;
  estimate.emissions_kg = estimate.energy_kwh * carbon_intensity;
  estimate.method_label = std::move(method_label);
  return estimate;
}

CarbonEstimate carbon_from_gpu(double power_watts, double hours,
                               double carbon_intensity,
                               std::string method_label) {
  if (power_watts < 0 || hours < 0) {
    throw Error(ErrorKind::Precondition, "negative carbon inputs");
  }
  CarbonEstimate estimate;
  estimate.energy_kwh = power_watts * hours / 1000.0;
  estimate.carbon_intensity = carbon_intensity;
  estimate.emissions_kg = estimate.energy_kwh * carbon_intensity;
  estimate.method_label = std::move(method_label);
  return estimate;
}

CarbonEstimate psi_run_carbon(double n_reflector_requests, double wh_per_request,
                              double gpu_watts, double gpu_hours,
                              double carbon_intensity) {
  if (n_reflector_requests < 0 || wh_per_request < 0 || gpu_watts < 0 ||
      gpu_hours < 0) {
    throw Error(ErrorKind::Precondition, "negative carbon inputs");
  }
  CarbonEstimate estimate;
  estimate.energy_kwh =
      (n_reflector_requests * wh_per_request + gpu_watts * gpu_hours) / 1000.0;
  estimate.carbon_intensity = carbon_intensity;
  estimate.emissions_kg = estimate.energy_kwh * carbon_intensity;
  estimate.method_label = "this run";
  return estimate;
}

LengthStats length_stats(const Dataset& dataset, std::size_t bin_width) {
  if (dataset.empty()) {
    throw Error(ErrorKind::Precondition, "length_stats of an empty dataset");
  }
  if (bin_width == 0) {
    throw Error(ErrorKind::Precondition, "bin width must be positive");
  }
  std::vector<std::size_t> lengths;
  lengths.reserve(dataset.size());
  for (const auto& instance : dataset.items) {
    lengths.push_back(token_count(instance.instruction) +
                      token_count(instance.input) +
                      token_count(instance.output));
  }
  LengthStats stats;
  stats.bin_width = bin_width;
  stats.count = lengths.size();

  double sum = 0.0;
  std::size_t max_length = 0;
  for (std::size_t length : lengths) {
    sum += static_cast<double>(length);
    max_length = std::max(max_length, length);
  }
  stats.mean = sum / static_cast<double>(lengths.size());

  stats.histogram.assign(max_length / bin_width + 1, 0);
  for (std::size_t length : lengths) ++stats.histogram[length / bin_width];

  std::vector<std::size_t> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  std::size_t n = sorted.size();
  stats.median = (n % 2 == 1)
                     ? static_cast<double>(sorted[n / 2])
                     : (static_cast<double>(sorted[n / 2 - 1]) +
                        static_cast<double>(sorted[n / 2])) /
                           2.0;
  // Nearest-rank P90.
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(0.9 * static_cast<double>(n)));
  stats.p90 = static_cast<double>(sorted[std::max<std::size_t>(rank, 1) - 1]);
  return stats;
}

std::string render_report(const ReportInputs& inputs) {
  std::ostringstream out;
  out << "== " << inputs.run_label << " report ==\n\n";

  out << "Token usage\n";
  out << "  role        prompt        completion    total\n";
  for (Role role : {Role::Reflector, Role::Generator, Role::Embedder}) {
    TokenUsage usage;
    auto it = inputs.usage_by_role.find(role);
    if (it != inputs.usage_by_role.end()) usage = it->second;
    char line[160];
    std::snprintf(line, sizeof(line), "  %-10s  %-12s  %-12s  %s\n",
                  to_string(role), with_thousands(usage.prompt_tokens).c_str(),
                  with_thousands(usage.completion_tokens).c_str(),
                  with_thousands(usage.total()).c_str());
    out << line;
  }

  out << "\nCarbon estimates\n";
  out << "  method                      energy (kWh)  CI     kgCO2e\n";
  for (const auto& estimate : inputs.estimates) {
    char line[200];
    std::snprintf(line, sizeof(line), "  %-26s  %-12.4f  %-5.2f  %s\n",
                  estimate.method_label.c_str(), estimate.energy_kwh,
                  estimate.carbon_intensity, estimate.reported().c_str());
    out << line;
  }

  if (inputs.lengths.count > 0) {
    const auto& stats = inputs.lengths;
    out << "\nInstance length (whitespace tokens)\n";
    char line[160];
    std::snprintf(line, sizeof(line),
                  "  n=%zu  mean=%.1f  median=%.1f  p90=%.1f\n", stats.count,
                  stats.mean, stats.median, stats.p90);
    out << line;
    for (std::size_t bin = 0; bin < stats.histogram.size(); ++bin) {
      if (stats.histogram[bin] == 0) continue;
      std::snprintf(line, sizeof(line), "  [%zu,%zu): %zu\n",
                    bin * stats.bin_width, (bin + 1) * stats.bin_width,
                    stats.histogram[bin]);
      out << line;
    }
  }

  out << "\nNote: operational electricity only; embodied emissions from "
         "hardware manufacturing, transport and disposal are excluded, so "
         "these estimates should be considered lower bounds.\n";
  return out.str();
}

std::string render_report_json(const ReportInputs& inputs) {
  nlohmann::ordered_json doc;
  doc["run_label"] = inputs.run_label;
  nlohmann::ordered_json usage;
  for (Role role : {Role::Reflector, Role::Generator, Role::Embedder}) {
    TokenUsage tokens;
    auto it = inputs.usage_by_role.find(role);
    if (it != inputs.usage_by_role.end()) tokens = it->second;
    usage[to_string(role)] = {{"prompt_tokens", tokens.prompt_tokens},
                              {"completion_tokens", tokens.completion_tokens},
                              {"total", tokens.total()}};
  }
  doc["usage_by_role"] = std::move(usage);
  nlohmann::ordered_json estimates = nlohmann::ordered_json::array();
  for (const auto& estimate : inputs.estimates) {
    estimates.push_back({{"method", estimate.method_label},
                         {"energy_kwh", estimate.energy_kwh},
                         {"carbon_intensity", estimate.carbon_intensity},
                         {"emissions_kg", estimate.emissions_kg},
                         {"emissions_kg_reported", estimate.reported()}});
  }
  doc["carbon_estimates"] = std::move(estimates);
  if (inputs.lengths.count > 0) {
    doc["length_stats"] = {{"count", inputs.lengths.count},
                           {"bin_width", inputs.lengths.bin_width},
                           {"mean", inputs.lengths.mean},
                           {"median", inputs.lengths.median},
                           {"p90", inputs.lengths.p90},
                           {"histogram", inputs.lengths.histogram}};
  }
  doc["caveat"] = "operational emissions only; lower bounds";
  return doc.dump(2) + "\n";
}

}  // namespace psi
