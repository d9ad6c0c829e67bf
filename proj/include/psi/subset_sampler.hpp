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
#include <vector>

#include "psi/types.hpp"

namespace psi {

/// One random subset d_i of the initial dataset.
struct SubsetSample {
  int index = 0;  // in [0, T)
  std::vector<std::size_t> instance_indices;  // distinct, in draw order
};

/// Draws T subsets of `subset_size` distinct indices into a dataset of
/// `population` items. Draws are independent across subsets, so the same
/// instance may appear in several of them. Deterministic under rng_seed.
std::vector<SubsetSample> sample_subsets(std::size_t population, int t,
                                         std::size_t subset_size,
                                         std::uint64_t rng_seed);

inline std::vector<SubsetSample> sample_subsets(const Dataset& initial, int t,
                                                std::size_t subset_size,
                                                std::uint64_t rng_seed) {
  return sample_subsets(initial.size(), t, subset_size, rng_seed);
}

}  // namespace psi
