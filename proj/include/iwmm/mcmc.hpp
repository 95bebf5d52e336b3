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

// Posterior sampler for the warped mixture: collapsed Gibbs over cluster
// assignments, hybrid Monte Carlo over latent coordinates and over kernel
// hyperparameters, each leaving the joint p(Y, X, Z | theta) invariant.

#include <cstdint>
#include <string>
#include <vector>

#include "iwmm/common.hpp"
#include "iwmm/data.hpp"
#include "iwmm/gp.hpp"
#include "iwmm/mixture.hpp"
#include "iwmm/random.hpp"

namespace iwmm {

struct HmcConfig {
  double step_size = 0.01;
  int num_leapfrog = 10;
  double target_accept = 0.65;
  int adapt_iters = -1;  ///< -1: adapt during burn-in

  std::vector<std::string> violations(const std::string& prefix) const;
};

enum class SamplerMode {
  iwmm,  ///< warped mixture
  igmm,  ///< identity mapping: X = Y, Q = D, no HMC
};

enum class InitScheme {
  automatic,  ///< observed coordinates when Q = D, otherwise PCA
  observed,
  pca,
};

struct SamplerConfig {
  int total_iters = 5000;
  int burn_in = 1000;
  int thin = 10;
  HmcConfig hmc_x{0.01, 10, 0.65, -1};
  HmcConfig hmc_theta{0.05, 5, 0.65, -1};
  GWPrior prior;        ///< empty u/s mean "defaults for Q"
  int latent_dim = 0;   ///< 0 means Q = D
  InitScheme init = InitScheme::automatic;
  std::uint64_t seed = 1;
  SamplerMode mode = SamplerMode::iwmm;
  KernelParams kernel_init;
  bool sample_theta = true;
  bool check_joint = false;  ///< verify the cached joint after every iteration

  /// Latent dimension for data of dimension d.
  int resolved_latent_dim(Eigen::Index d) const;
  /// Prior with defaults filled in for latent dimension q.
  GWPrior resolved_prior(int q) const;
  std::vector<std::string> violations(Eigen::Index data_dim) const;
  void validate(Eigen::Index data_dim) const;
};

/// Target of the chain: centered observations and fixed hyperparameters.
struct Model {
  Matrix y;
  GWPrior prior;
  SamplerMode mode = SamplerMode::iwmm;
  Exec exec = Exec::parallel;
};

/// One MCMC state. The cached log-joint is split into its three factors.
struct ChainState {
  Matrix x;
  Assignments assignments;
  KernelParams kernel;
  RngStreams rng;
  int iter = 0;
  double log_gp = 0.0;   ///< log p(Y | X, theta); 0 in igmm mode
  double log_mix = 0.0;  ///< log p(X | Z)
  double log_crp = 0.0;  ///< log p(Z)

  double log_joint() const { return log_gp + log_mix + log_crp; }
};

/// Log joint recomputed from scratch.
double log_joint(const Model& model, const ChainState& state);
/// Re-derives every cached factor from scratch.
void refresh_cache(const Model& model, ChainState& state);

ChainState make_state(const Model& model, Matrix x, const std::vector<int>& labels,
                      const KernelParams& kernel, std::uint64_t seed);

/// Resample every z_n in index order from its collapsed conditional.
void gibbs_sweep(const Model& model, ChainState& state);

struct HmcResult {
  bool accepted = false;
  double accept_prob = 0.0;
  bool non_finite = false;
  double delta_h = 0.0;  ///< H(proposal) - H(current)
};

/// One joint HMC trajectory over all latent coordinates (Z, theta fixed).
HmcResult hmc_update_x(const Model& model, ChainState& state, double step_size, int num_leapfrog);
/// One HMC trajectory over (log alpha, log ell, log beta) (X, Z fixed).
HmcResult hmc_update_theta(const Model& model, ChainState& state, double step_size,
                           int num_leapfrog);

/// Potential energy -log p(Y, X | Z, theta) and its gradient in X.
double x_potential(const Model& model, const Matrix& x, const Assignments& a,
                   const KernelParams& kernel, Matrix* grad);
/// Potential energy -[log p(Y | X, theta) + log p(theta)] and its gradient.
double theta_potential(const Model& model, const Matrix& x, const KernelParams& kernel,
                       Eigen::Vector3d* grad);

/// Step-size adaptation by dual averaging toward a target acceptance rate.
class DualAveraging {
 public:
  DualAveraging(double initial_step, double target_accept);
  void update(double accept_prob);
  double step() const { return std::exp(log_step_); }
  /// Averaged step to freeze once adaptation ends.
  double final_step() const { return std::exp(log_step_bar_); }

 private:
  double mu_;
  double target_;
  double log_step_;
  double log_step_bar_ = 0.0;
  double h_bar_ = 0.0;
  int m_ = 0;
};

struct PriorSample {
  Matrix x;
  std::vector<int> z;
  Matrix y;
};

/// Draw (X, Z, Y) from the generative model: CRP partition, Gaussian-Wishart
/// component parameters, latent points, and GP outputs with noise.
PriorSample sample_prior(int n, int q, int d, const GWPrior& prior, const KernelParams& kernel,
                         std::uint64_t seed);
PriorSample sample_prior(int n, int q, int d, const GWPrior& prior, const KernelParams& kernel,
                         Engine& rng);
/// Y columns drawn i.i.d. from N(0, gram(X)).
Matrix sample_gp_outputs(const Matrix& x, const KernelParams& kernel, int d, Engine& rng);

struct SampleRecord {
  int iter = 0;
  Matrix x;
  std::vector<int> z;  ///< canonical labels
  KernelParams kernel;
  double log_joint = 0.0;
};

struct DiagnosticsRow {
  int iter = 0;
  double log_joint = 0.0;
  int num_clusters = 0;
  double accept_x = 0.0;      ///< acceptance probability of this iteration's X move
  double accept_theta = 0.0;
  double step_x = 0.0;
  double step_theta = 0.0;
};

/// Everything needed to evaluate posterior quantities after a run.
struct SampleArchive {
  SamplerMode mode = SamplerMode::iwmm;
  GWPrior prior;
  Matrix y;         ///< centered training observations
  Vector means;     ///< centering record
  std::vector<SampleRecord> samples;
  std::vector<DiagnosticsRow> diagnostics;
  int non_finite_rejects = 0;

  Eigen::Index latent_dim() const { return prior.dim(); }
  Eigen::Index data_dim() const { return y.cols(); }
};

/// Initial latent coordinates per the configured scheme.
Matrix initial_latent(const Matrix& centered_y, int q, InitScheme scheme);

/// Alternates gibbs_sweep, hmc_update_x and hmc_update_theta. Deterministic
/// given config.seed.
SampleArchive run_chain(const Dataset& data, const SamplerConfig& config);

}  // namespace iwmm
