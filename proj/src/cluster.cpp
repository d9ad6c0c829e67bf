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

#include "psi/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "psi/rng.hpp"

namespace psi::cluster {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kCollapseMass = 1e-10;

void check_finite(const Matrix& points) {
  if (!points.allFinite()) {
    throw Error(ErrorKind::Precondition, "non-finite entries in input points");
  }
}

/// log N(x | mu, diag(var)) for one point/component pair.
double log_gaussian_diag(const Matrix& points, Eigen::Index i,
                         const Matrix& means, const Matrix& covariances,
                         int component) {
  const Eigen::Index dim = points.cols();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double var = covariances(component, j);
    const double diff = points(i, j) - means(component, j);
    acc += std::log(var) + diff * diff / var;
  }
  return -0.5 * (static_cast<double>(dim) * kLogTwoPi + acc);
}

/// E-step: fills responsibilities (n x k) and returns Sum_i log p(x_i).
double expectation(const Matrix& points, const MixtureModel& model,
                   Matrix* responsibilities) {
  const Eigen::Index n = points.rows();
  const int k = model.k;
  double log_likelihood = 0.0;
  std::vector<double> log_weighted(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    double max_term = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      log_weighted[c] = std::log(model.weights(c)) +
                        log_gaussian_diag(points, i, model.means,
                                          model.covariances, c);
      max_term = std::max(max_term, log_weighted[c]);
    }
    double sum = 0.0;
    for (int c = 0; c < k; ++c) sum += std::exp(log_weighted[c] - max_term);
    const double lse = max_term + std::log(sum);
    log_likelihood += lse;
    for (int c = 0; c < k; ++c) {
      (*responsibilities)(i, c) = std::exp(log_weighted[c] - lse);
    }
  }
  return log_likelihood;
}

Vector per_dim_variance(const Matrix& points, double floor) {
  const Eigen::Index n = points.rows();
  const Eigen::Index dim = points.cols();
  Vector mean = Vector::Zero(dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) mean(j) += points(i, j);
  }
  mean /= static_cast<double>(n);
  Vector var = Vector::Zero(dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double diff = points(i, j) - mean(j);
      var(j) += diff * diff;
    }
  }
  var /= static_cast<double>(n);
  for (Eigen::Index j = 0; j < dim; ++j) var(j) = std::max(var(j), floor);
  return var;
}

/// k-means++ style seeding: first center uniform, later centers picked
/// with probability proportional to squared distance to the closest one.
Matrix seed_means(const Matrix& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  const Eigen::Index dim = points.cols();
  Matrix means(k, dim);
  means.row(0) = points.row(static_cast<Eigen::Index>(rng.bounded(n)));

  Vector best_d2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d2 = (points.row(i) - means.row(c - 1)).squaredNorm();
      best_d2(i) = std::min(best_d2(i), d2);
      total += best_d2(i);
    }
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.bounded(n));
    } else {
      const double r = rng.next_unit() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += best_d2(i);
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    }
    means.row(c) = points.row(pick);
  }
  return means;
}

}  // namespace

PcaResult reduce_dim_full(const Matrix& points, Eigen::Index target_dim) {
  const Eigen::Index n = points.rows();
  const Eigen::Index dim = points.cols();
  if (n < 2) {
    throw Error(ErrorKind::Precondition, "PCA needs at least 2 points");
  }
  if (target_dim < 1 || target_dim > dim) {
    throw Error(ErrorKind::Precondition,
                "target dimension must be in [1, input dim]");
  }
  check_finite(points);

  PcaResult result;
  result.mean = points.colwise().mean();
  Matrix centered = points.rowwise() - result.mean.transpose();

  if (target_dim == dim) {
    result.projected = centered;
    result.basis = Matrix::Identity(dim, dim);
    result.explained_variance =
        centered.array().square().colwise().sum() / double(n - 1);
    return result;
  }

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  result.basis = svd.matrixV().leftCols(target_dim);
  result.projected = centered * result.basis;
  result.explained_variance = svd.singularValues()
                                  .head(target_dim)
                                  .array()
                                  .square()
                                  .matrix() /
                              double(n - 1);
  return result;
}

Matrix reduce_dim(const Matrix& points, Eigen::Index target_dim) {
  return reduce_dim_full(points, target_dim).projected;
}

MixtureModel fit_mixture(const Matrix& points, int k, std::uint64_t rng_seed,
                         const FitOptions& options) {
  const Eigen::Index n = points.rows();
  const Eigen::Index dim = points.cols();
  if (k < 1) {
    throw Error(ErrorKind::Precondition, "component count must be >= 1");
  }
  if (n < k) {
    throw Error(ErrorKind::Precondition,
                "need at least K points to fit K components");
  }
  check_finite(points);

  Rng rng(rng_seed);
  MixtureModel model;
  model.k = k;
  model.weights = Vector::Constant(k, 1.0 / k);
  model.means = seed_means(points, k, rng);
  const Vector global_var = per_dim_variance(points, options.variance_floor);
  model.covariances = global_var.transpose().replicate(k, 1);

  Matrix responsibilities(n, k);
  double previous = -std::numeric_limits<double>::infinity();
  bool reinitialized = false;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double log_likelihood = expectation(points, model, &responsibilities);
    if (log_likelihood < previous - 1e-8) {
      throw Error(ErrorKind::Integrity,
                  "EM log-likelihood decreased; fit is inconsistent");
    }
    model.log_likelihood_trace.push_back(log_likelihood);
    model.log_likelihood = log_likelihood;
    if (iter > 0 && log_likelihood - previous < options.tolerance) break;
    previous = log_likelihood;

    // M-step, accumulated index-ascending.
    Vector mass = Vector::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < k; ++c) mass(c) += responsibilities(i, c);
    }

    int collapsed = -1;
    for (int c = 0; c < k; ++c) {
      if (mass(c) < kCollapseMass) {
        collapsed = c;
        break;
      }
    }
    if (collapsed >= 0) {
      if (reinitialized) {
        throw Error(ErrorKind::Fitting,
                    "mixture component collapsed twice during EM");
      }
      reinitialized = true;
      // Restart the dead component at the worst-explained point.
      Eigen::Index worst = 0;
      double worst_density = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          best = std::max(best, log_gaussian_diag(points, i, model.means,
                                                  model.covariances, c));
        }
        if (best < worst_density) {
          worst_density = best;
          worst = i;
        }
      }
      model.means.row(collapsed) = points.row(worst);
      model.covariances.row(collapsed) = global_var.transpose();
      model.weights = Vector::Constant(k, 1.0 / k);
      previous = -std::numeric_limits<double>::infinity();
      continue;
    }

    for (int c = 0; c < k; ++c) {
      model.weights(c) = mass(c) / static_cast<double>(n);
      for (Eigen::Index j = 0; j < dim; ++j) {
        double mean_acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          mean_acc += responsibilities(i, c) * points(i, j);
        }
        model.means(c, j) = mean_acc / mass(c);
      }
      for (Eigen::Index j = 0; j < dim; ++j) {
        double var_acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double diff = points(i, j) - model.means(c, j);
          var_acc += responsibilities(i, c) * diff * diff;
        }
        model.covariances(c, j) =
            std::max(var_acc / mass(c), options.variance_floor);
      }
    }
  }

  model.bic = bic_score(model.log_likelihood, k, dim, n);
  return model;
}

MixtureModel fit_best(const Matrix& points, int k, std::uint64_t rng_seed,
                      int n_init, const FitOptions& options) {
  if (n_init < 1) {
    throw Error(ErrorKind::Precondition, "n_init must be >= 1");
  }
  MixtureModel best;
  bool have_best = false;
  for (int init = 0; init < n_init; ++init) {
    const std::uint64_t seed =
        derive_seed(rng_seed, static_cast<std::uint64_t>(k) * 97 + init);
    try {
      MixtureModel candidate = fit_mixture(points, k, seed, options);
      if (!have_best || candidate.log_likelihood > best.log_likelihood) {
        best = std::move(candidate);
        have_best = true;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Fitting) throw;
      // a degenerate restart is skipped as long as another one succeeds
    }
  }
  if (!have_best) {
    throw Error(ErrorKind::Fitting, "all EM restarts degenerated");
  }
  return best;
}

double bic_score(double log_likelihood, int k, Eigen::Index dim,
                 Eigen::Index n_points) {
  // Free parameters: K means and K diagonal covariances of size d, plus
  // K-1 independent weights.
  const double p = static_cast<double>(k) * (2.0 * static_cast<double>(dim) + 1.0) - 1.0;
  return -2.0 * log_likelihood + p * std::log(static_cast<double>(n_points));
}

int select_k(const Matrix& points, int k_max, std::uint64_t rng_seed,
             int n_init, const FitOptions& options) {
  if (k_max < 1 || points.rows() < k_max) {
    throw Error(ErrorKind::Precondition,
                "k_max must be in [1, number of points]");
  }
  int best_k = 1;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= k_max; ++k) {
    MixtureModel model = fit_best(points, k, rng_seed, n_init, options);
    if (model.bic < best_bic) {  // strict: ties stay with the smaller K
      best_bic = model.bic;
      best_k = k;
    }
  }
  return best_k;
}

SoftAssignment soft_assign(const MixtureModel& model, const Matrix& points,
                           double tau) {
  if (points.cols() != model.means.cols()) {
    throw Error(ErrorKind::Precondition,
                "points and model have different dimensionality");
  }
  check_finite(points);
  const Eigen::Index n = points.rows();
  const int k = model.k;

  SoftAssignment assignment;
  assignment.responsibilities.resize(n, k);
  expectation(points, model, &assignment.responsibilities);

  // Raw memberships against the threshold, argmax fallback.
  std::vector<std::vector<int>> raw(static_cast<std::size_t>(n));
  std::vector<bool> used(static_cast<std::size_t>(k), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) {
      if (assignment.responsibilities(i, c) >= tau) {
        raw[i].push_back(c);
      }
    }
    if (raw[i].empty()) {
      int argmax = 0;
      for (int c = 1; c < k; ++c) {
        if (assignment.responsibilities(i, c) >
            assignment.responsibilities(i, argmax)) {
          argmax = c;
        }
      }
      raw[i].push_back(argmax);
    }
    for (int c : raw[i]) used[c] = true;
  }

  // Drop memberless components and re-pack indices.
  std::vector<int> packed(static_cast<std::size_t>(k), -1);
  for (int c = 0; c < k; ++c) {
    if (used[c]) {
      packed[c] = static_cast<int>(assignment.kept_components.size());
      assignment.kept_components.push_back(c);
    }
  }
  assignment.memberships.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c : raw[i]) assignment.memberships[i].push_back(packed[c]);
  }
  return assignment;
}

std::vector<PrincipleCluster> cluster_principles(
    const std::vector<LowLevelPrinciple>& principles,
    const ClusterConfig& config, std::uint64_t rng_seed) {
  if (principles.empty()) {
    throw Error(ErrorKind::Precondition, "no principles to cluster");
  }
  const std::size_t n = principles.size();
  const std::size_t dim = principles.front().embedding.size();
  if (dim == 0) {
    throw Error(ErrorKind::Precondition, "principles are not embedded");
  }
  for (const auto& principle : principles) {
    if (principle.embedding.size() != dim) {
      throw Error(ErrorKind::Integrity,
                  "inconsistent embedding dimensionality across principles");
    }
  }

  if (n == 1) {
    PrincipleCluster cluster;
    cluster.member_indices = {0};
    cluster.centroid = principles[0].embedding;
    return {cluster};
  }

  Matrix points(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          principles[i].embedding[j];
    }
  }

  const Eigen::Index target_dim = std::min<Eigen::Index>(
      config.target_dim,
      std::min<Eigen::Index>(static_cast<Eigen::Index>(dim),
                             static_cast<Eigen::Index>(n - 1)));
  Matrix reduced = reduce_dim(points, target_dim);

  const int k_max = std::min<int>(config.k_max, static_cast<int>(n));
  const int k_star = select_k(reduced, k_max, rng_seed, config.n_init, config.fit);
  MixtureModel model =
      fit_best(reduced, k_star, rng_seed, config.n_init, config.fit);
  SoftAssignment assignment = soft_assign(model, reduced, config.tau);

  std::vector<PrincipleCluster> clusters(assignment.kept_components.size());
  for (std::size_t packed = 0; packed < assignment.kept_components.size();
       ++packed) {
    const int component = assignment.kept_components[packed];
    clusters[packed].centroid.resize(static_cast<std::size_t>(model.means.cols()));
    for (Eigen::Index j = 0; j < model.means.cols(); ++j) {
      clusters[packed].centroid[static_cast<std::size_t>(j)] =
          model.means(component, j);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (int packed : assignment.memberships[i]) {
      clusters[static_cast<std::size_t>(packed)].member_indices.push_back(i);
    }
  }
  return clusters;
}

}  // namespace psi::cluster
