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

#include <Eigen/Dense>

#include "psi/types.hpp"

namespace psi::cluster {

// Embedding-space soft clustering with a data-driven component count:
// PCA conditioning, diagonal-covariance Gaussian mixtures fit by EM, BIC
// model selection, and posterior-threshold soft assignment. Points are
// rows. All accumulations run in fixed index-ascending order, so results
// are bitwise reproducible for a given seed.

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct PcaResult {
  Matrix projected;            // n x target_dim
  Matrix basis;                // d x target_dim, orthonormal columns
  Vector mean;                 // d
  Vector explained_variance;   // per kept direction, 1/(n-1) normalization
};

/// Principal-component projection onto target_dim directions,
/// mean-centered. target_dim == input dim returns the centered input
/// unchanged (identity up to centering).
PcaResult reduce_dim_full(const Matrix& points, Eigen::Index target_dim);
Matrix reduce_dim(const Matrix& points, Eigen::Index target_dim);

struct FitOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;       // stop when logL improves less than this
  double variance_floor = 1e-6;  // per-dimension lower bound
};

struct MixtureModel {
  int k = 1;
  Vector weights;      // k, sums to 1
  Matrix means;        // k x d
  Matrix covariances;  // k x d, diagonal entries, floored
  double log_likelihood = 0.0;
  double bic = 0.0;
  std::vector<double> log_likelihood_trace;  // one entry per EM iteration
};

/// Diagonal-covariance EM with k-means++ seeding. The log-likelihood is
/// nondecreasing across iterations and asserted in-loop; a component whose
/// responsibility mass collapses is reinitialized once, after that the fit
/// fails with Error(Fitting).
MixtureModel fit_mixture(const Matrix& points, int k, std::uint64_t rng_seed,
                         const FitOptions& options = {});

/// Best of n_init restarts by log-likelihood (first wins ties).
MixtureModel fit_best(const Matrix& points, int k, std::uint64_t rng_seed,
                      int n_init, const FitOptions& options = {});

/// BIC = -2 logL + p ln n with p = K(2d+1) - 1 free parameters.
double bic_score(double log_likelihood, int k, Eigen::Index dim,
                 Eigen::Index n_points);

/// Fits K = 1..k_max (n_init restarts each) and returns the K minimizing
/// BIC; ties break toward smaller K.
int select_k(const Matrix& points, int k_max, std::uint64_t rng_seed,
             int n_init = 5, const FitOptions& options = {});

struct SoftAssignment {
  // Posterior responsibilities under the fitted model; every row sums to 1.
  Matrix responsibilities;  // n x k (original component count)
  // Per-point component memberships using packed indices: components that
  // attracted no member are dropped and the survivors renumbered.
  std::vector<std::vector<int>> memberships;
  // packed index -> original component index
  std::vector<int> kept_components;
};

/// Memberships are {k : responsibility >= tau}; a point that clears no
/// threshold keeps its argmax component alone, so membership sets are
/// never empty.
SoftAssignment soft_assign(const MixtureModel& model, const Matrix& points,
                           double tau);

struct ClusterConfig {
  int k_max = 10;          // capped at the point count
  double tau = 0.1;
  int target_dim = 8;      // capped at min(dim, n-1)
  int n_init = 5;
  FitOptions fit;
};

/// Full pipeline over embedded principles: reduce_dim -> select_k -> fit ->
/// soft_assign. Every principle lands in at least one cluster; centroids
/// live in the reduced space.
std::vector<PrincipleCluster> cluster_principles(
    const std::vector<LowLevelPrinciple>& principles,
    const ClusterConfig& config, std::uint64_t rng_seed);

}  // namespace psi::cluster
