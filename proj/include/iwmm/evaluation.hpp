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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "iwmm/data.hpp"
#include "iwmm/mcmc.hpp"
#include "iwmm/predictive.hpp"

namespace iwmm {

/// Fraction of point pairs on which two partitions agree. Throws
/// ValidationError for fewer than two points or unequal lengths.
double rand_index(const std::vector<int>& pred, const std::vector<int>& truth);

/// Assignments of the archived sample with the highest log joint.
std::vector<int> cluster_summary(const SampleArchive& archive);

// Isotropic Gaussian KDE.
/// Sum over points of the leave-one-out log density at bandwidth h.
double kde_loo_objective(const Matrix& train, double h, Exec exec = Exec::parallel);
/// Bandwidth maximizing the leave-one-out objective: coarse scan over
/// [1e-3, 1e3] x median pairwise distance, then golden-section on log h.
double kde_fit(const Matrix& train, Exec exec = Exec::parallel);
/// Per-point log density of the KDE on `train` at rows of `test`.
Vector kde_log_density(const Matrix& test, const Matrix& train, double bandwidth,
                       Exec exec = Exec::parallel);

struct FoldPlan {
  int folds = 10;
  std::uint64_t seed = 0;
  std::vector<int> fold_of;  ///< fold id per point

  std::vector<int> train(int k) const;
  std::vector<int> test(int k) const;
};

/// Random partition of 0..n-1 into `folds` groups whose sizes differ by at most one.
FoldPlan make_folds(int n, int folds, std::uint64_t seed);

struct MetricReport {
  std::string dataset;
  std::string method;
  std::string metric;  ///< "rand" or "test_loglik"
  std::vector<double> per_fold;
  double mean = 0.0;
  double std_error = 0.0;

  void finalize();
};

struct BenchmarkConfig {
  SamplerConfig sampler;
  PredictiveConfig predictive;
  int folds = 10;
  std::uint64_t fold_seed = 1;
  bool rand = true;
  bool loglik = true;
  bool parallel_jobs = true;
};

/// Method names: kde, igmm, iwmm_q2 (Q = 2), iwmm_qd (Q = D).
const std::vector<std::string>& benchmark_methods();

/// Per fold: fit each method on the training part, score held-out mean log
/// density and the Rand index of the training-fold clustering.
std::vector<MetricReport> run_benchmark(const Dataset& data, const std::vector<std::string>& methods,
                                        const BenchmarkConfig& config);

/// Rows (dataset, method, fold, metric, value); aggregate rows use fold
/// "mean" and "stderr".
void write_reports_csv(const std::filesystem::path& path, const std::vector<MetricReport>& reports);

}  // namespace iwmm
