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

#include "psi/subset_sampler.hpp"

#include <numeric>

#include "psi/rng.hpp"

namespace psi {

std::vector<SubsetSample> sample_subsets(std::size_t population, int t,
                                         std::size_t subset_size,
                                         std::uint64_t rng_seed) {
  if (t < 1) {
    throw Error(ErrorKind::Precondition, "subset count T must be >= 1");
  }
  if (subset_size == 0 || subset_size > population) {
    throw Error(ErrorKind::Precondition,
                "subset size must be in [1, |initial|]");
  }

  Rng rng(rng_seed);
  std::vector<SubsetSample> subsets;
  subsets.reserve(static_cast<std::size_t>(t));

  std::vector<std::size_t> indices(population);
  for (int subset = 0; subset < t; ++subset) {
    // Partial Fisher-Yates: the first subset_size slots become a uniform
    // sample without replacement.
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    SubsetSample sample;
    sample.index = subset;
    for (std::size_t i = 0; i < subset_size; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.bounded(population - i));
      std::swap(indices[i], indices[j]);
      sample.instance_indices.push_back(indices[i]);
    }
    subsets.push_back(std::move(sample));
  }
  return subsets;
}

}  // namespace psi
