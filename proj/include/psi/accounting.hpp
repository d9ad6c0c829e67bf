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
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "psi/types.hpp"

namespace psi {

enum class Role { Reflector, Generator, Embedder };

const char* to_string(Role role);
Role role_from_string(const std::string& name);

struct TokenUsage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;

  std::uint64_t total() const { return prompt_tokens + completion_tokens; }

  TokenUsage& operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    return *this;
  }
  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct UsageRecord {
  Role role = Role::Generator;
  std::string request_id;
  TokenUsage usage;
  std::string timestamp;  // ISO-8601 UTC
};

/// Append-only token ledger; the single mutable structure in the system.
/// Appends are atomic, reads take a snapshot.
class UsageLedger {
 public:
  void append(UsageRecord record);

  std::vector<UsageRecord> snapshot() const;
  std::map<Role, TokenUsage> totals_by_role() const;
  std::uint64_t request_count(Role role) const;

  std::string to_csv() const;
  /// Appends the rows of a previously saved CSV.
  void load_csv(std::string_view bytes);

 private:
  mutable std::mutex mutex_;
  std::vector<UsageRecord> records_;
};

/// Energy times grid intensity, the closed-form emission estimate.
struct CarbonEstimate {
  double energy_kwh = 0.0;
  double carbon_intensity = 0.0;  // kgCO2e per kWh
  double emissions_kg = 0.0;      // energy_kwh * carbon_intensity, unrounded
  std::string method_label;

  /// kgCO2e rounded to 2 decimal places, as reported.
  std::string reported() const;
};

inline constexpr double kDefaultCarbonIntensity = 0.24;  // kgCO2e/kWh
inline constexpr double kDefaultWhPerRequest = 2.9;      // hosted-LLM request

/// Hosted endpoint estimate: n requests at a fixed per-request energy.
CarbonEstimate carbon_from_requests(double n_requests, double wh_per_request,
                                    double carbon_intensity,
                                    std::string method_label = {});

/// Local GPU estimate from nameplate power and wall-clock hours.
CarbonEstimate carbon_from_gpu(double power_watts, double hours,
                               double carbon_intensity,
                               std::string method_label = {});

/// Combined run estimate: hosted reflector requests plus local generator GPU.
CarbonEstimate psi_run_carbon(double n_reflector_requests, double wh_per_request,
                              double gpu_watts, double gpu_hours,
                              double carbon_intensity);

struct LengthStats {
  std::vector<std::size_t> histogram;  // counts per bin
  std::size_t bin_width = 25;
  double mean = 0.0;
  double median = 0.0;
  double p90 = 0.0;
  std::size_t count = 0;
};

/// Whitespace-token length of instruction+input+output per instance.
LengthStats length_stats(const Dataset& dataset, std::size_t bin_width = 25);

struct ReportInputs {
  std::map<Role, TokenUsage> usage_by_role;
  std::vector<CarbonEstimate> estimates;
  LengthStats lengths;       // count == 0 means "no dataset section"
  std::string run_label = "run";
};

/// Human-readable table of per-role tokens and kgCO2e, plus a JSON twin
/// that re-parses to the same totals.
std::string render_report(const ReportInputs& inputs);
std::string render_report_json(const ReportInputs& inputs);

}  // namespace psi
