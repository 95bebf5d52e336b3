/*
 * Copyright 2026 The iwmm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Collapsed Dirichlet-process mixture of Gaussians with a conjugate
// Gaussian-Wishart base measure over latent coordinates.
//
// A component with precision R and mean mu has prior
//   mu | R ~ N(u, (r R)^{-1}),   R ~ W(S^{-1}, nu).
// After absorbing N_c points the posterior parameters are
//   r_c = r + N_c,  nu_c = nu + N_c,  u_c = (r u + sum x) / r_c,
//   S_c = S + sum x x^T + r u u^T - r_c u_c u_c^T.

#include <optional>
#include <vector>

#include "iwmm/common.hpp"

namespace iwmm {

struct GWPrior {
  Vector u;         ///< prior mean of component means
  double r = 1.0;   ///< relative precision of the mean
  Matrix s;         ///< scale matrix (SPD); the Wishart scale is s^{-1}
  double nu = 0.0;  ///< degrees of freedom, > Q - 1
  double eta = 1.0; ///< CRP concentration

  /// u = 0, r = 1, S = I, nu = Q + 1, eta = 1.
  static GWPrior defaults(int q);

  Eigen::Index dim() const { return u.size(); }
  /// Every violated constraint, empty when valid.
  std::vector<std::string> violations() const;
  void validate() const;
};

/// Sufficient statistics and posterior parameters of one component.
/// Mutations are O(Q^2) rank-one Cholesky modifications of S_c.
class ComponentStats {
 public:
  /// Empty component: parameters equal the prior.
  explicit ComponentStats(const GWPrior& prior);
  /// Batch construction from the rows of `points`.
  static ComponentStats from_points(const Matrix& points, const GWPrior& prior);

  void add(const Vector& x);
  /// Exact inverse of add. Throws std::logic_error when empty. Removing the
  /// last point restores the prior exactly.
  void remove(const Vector& x, const GWPrior& prior);

  int count() const { return count_; }
  double r_c() const { return r_c_; }
  double nu_c() const { return nu_c_; }
  const Vector& u_c() const { return u_c_; }
  /// Lower Cholesky factor of S_c.
  const Matrix& s_chol() const { return s_chol_; }
  double log_det_s() const { return log_det_; }
  const Vector& sum_x() const { return sum_x_; }
  Matrix scatter() const { return s_chol_ * s_chol_.transpose(); }
  /// Number of downdates that fell back to refactorization since construction.
  int refactorizations() const { return refactorizations_; }

 private:
  void rebuild_from_sums(const GWPrior& prior);
  void refresh_log_det();

  int count_ = 0;
  double r_c_ = 0.0;
  double nu_c_ = 0.0;
  Vector u_c_;
  Matrix s_chol_;
  Vector sum_x_;
  Matrix sum_xx_;
  double log_det_ = 0.0;
  int refactorizations_ = 0;
};

ComponentStats add_point(ComponentStats stats, const Vector& x);
ComponentStats remove_point(ComponentStats stats, const Vector& x, const GWPrior& prior);

/// In-place rank-one modification of a lower Cholesky factor:
/// L L^T + sign v v^T. Returns false (leaving `l` unspecified) when a
/// downdate would lose positive definiteness.
bool cholesky_rank_one(Matrix& l, Vector v, double sign);

/// Log marginal of the points absorbed by `stats` under the prior.
double component_log_marginal(const ComponentStats& stats, const GWPrior& prior);

/// log p(x | points in stats): predictive of one more point. For an empty
/// component this is the new-component likelihood.
double log_pred_in_component(const Vector& x, const ComponentStats& stats, const GWPrior& prior);

/// Gradient in x of log p(X|Z) for a point x that belongs to `stats`:
/// -nu_c S_c^{-1} (x - u_c).
Vector log_prior_grad_x(const Vector& x, const ComponentStats& stats);

/// Cluster assignments with per-cluster statistics in a slot map. Slot ids
/// are stable while a cluster lives; freed slots are reused.
class Assignments {
 public:
  Assignments() = default;
  /// `labels` may be arbitrary non-negative ids; they are mapped to slots.
  Assignments(const Matrix& x, const std::vector<int>& labels, const GWPrior& prior);

  int num_points() const { return static_cast<int>(z_.size()); }
  int num_clusters() const { return num_active_; }
  /// Slot of point n, or -1 while detached.
  int slot_of(int n) const { return z_[n]; }
  const ComponentStats& stats(int slot) const { return slots_[slot]; }
  std::vector<int> active_slots() const;
  std::vector<int> counts() const;

  /// Detach point n from its cluster; empty clusters are retired.
  void detach(int n, const Vector& x, const GWPrior& prior);
  /// Attach a detached point to an existing slot.
  void attach(int n, int slot, const Vector& x);
  /// Attach a detached point to a fresh cluster; returns the slot.
  int attach_new(int n, const Vector& x, const GWPrior& prior);

  /// Recompute all statistics from scratch for the given coordinates.
  void rebuild(const Matrix& x, const GWPrior& prior);

  /// Labels 0..C-1 in order of first appearance.
  std::vector<int> canonical_labels() const;

 private:
  std::vector<int> z_;
  std::vector<ComponentStats> slots_;
  std::vector<bool> active_;
  std::vector<int> free_;
  int num_active_ = 0;
};

/// Sum over clusters of component_log_marginal; 0 for no points.
double log_marginal_x_given_z(const Matrix& x, const Assignments& a, const GWPrior& prior);
/// Same quantity from plain labels, built from scratch.
double log_marginal_x_given_z(const Matrix& x, const std::vector<int>& labels,
                              const GWPrior& prior);

/// log p(Z | eta) for cluster sizes `counts` (ignoring zeros).
double crp_log_prob(const std::vector<int>& counts, double eta);
double crp_log_prob(const Assignments& a, double eta);

struct GibbsWeights {
  std::vector<int> slots;      ///< active clusters after detaching the point
  std::vector<double> counts;  ///< N_{c\n}, aligned with slots
  double new_cluster = 0.0;    ///< eta
};

/// Unnormalized CRP prefactors for resampling a detached point.
GibbsWeights crp_gibbs_weights(const Assignments& a, double eta);

struct GibbsConditional {
  std::vector<int> slots;          ///< candidate slots; the last entry is -1 (new cluster)
  std::vector<double> log_weights; ///< unnormalized log weights, aligned with slots
  std::vector<double> probabilities;
};

/// Full conditional of a detached point's assignment.
GibbsConditional gibbs_conditional(const Vector& x, const Assignments& a, const GWPrior& prior);

}  // namespace iwmm
