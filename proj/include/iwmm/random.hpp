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
#include <random>
#include <string_view>

#include "iwmm/common.hpp"

namespace iwmm {

using Engine = std::mt19937_64;

/// 64-bit FNV-1a; used for stream derivation and data fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

/// Engine for the sub-stream `name` of a top-level seed. Distinct names give
/// statistically independent streams; the mapping is stable across runs.
Engine make_stream(std::uint64_t seed, std::string_view name);

/// Named sub-streams owned by one chain.
struct RngStreams {
  Engine gibbs;
  Engine hmc_x;
  Engine hmc_theta;
  Engine init;

  explicit RngStreams(std::uint64_t seed = 0);
  bool operator==(const RngStreams&) const = default;
};

double standard_normal(Engine& rng);
double uniform01(Engine& rng);
Vector standard_normal_vector(Engine& rng, Eigen::Index n);

/// Index drawn proportionally to exp(log_weights); log-sum-exp normalized.
std::size_t sample_log_categorical(Engine& rng, const std::vector<double>& log_weights);

/// Wishart draw W(scale, dof) via the Bartlett decomposition, where
/// `scale_chol` is the lower Cholesky factor of the scale matrix.
/// Requires dof > dim - 1.
Matrix sample_wishart(Engine& rng, const Matrix& scale_chol, double dof);

/// Draw from N(mean, precision^{-1}) given the lower Cholesky factor of the precision.
Vector sample_normal_from_precision(Engine& rng, const Vector& mean, const Matrix& precision_chol);

double log_sum_exp(const std::vector<double>& v);

}  // namespace iwmm
