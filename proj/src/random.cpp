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
#include "iwmm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace iwmm {

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& v : violations) msg += "\n  " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Engine make_stream(std::uint64_t seed, std::string_view name) {
  const std::uint64_t tag = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return Engine(seq);
}

RngStreams::RngStreams(std::uint64_t seed)
    : gibbs(make_stream(seed, "gibbs")),
      hmc_x(make_stream(seed, "hmc_x")),
      hmc_theta(make_stream(seed, "hmc_theta")),
      init(make_stream(seed, "init")) {}

double standard_normal(Engine& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double uniform01(Engine& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

Vector standard_normal_vector(Engine& rng, Eigen::Index n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::size_t sample_log_categorical(Engine& rng, const std::vector<double>& log_weights) {
  const double lse = log_sum_exp(log_weights);
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    acc += std::exp(log_weights[k] - lse);
    if (u < acc) return k;
  }
  // Rounding left acc slightly below one; pick the last category with mass.
  for (std::size_t k = log_weights.size(); k-- > 0;) {
    if (std::isfinite(log_weights[k])) return k;
  }
  return log_weights.size() - 1;
}

Matrix sample_wishart(Engine& rng, const Matrix& scale_chol, double dof) {
  const Eigen::Index q = scale_chol.rows();
  Matrix a = Matrix::Zero(q, q);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < q; ++i) {
    std::chi_squared_distribution<double> chi2(dof - static_cast<double>(i));
    a(i, i) = std::sqrt(chi2(rng));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = normal(rng);
  }
  const Matrix la = scale_chol * a;
  return la * la.transpose();
}

Vector sample_normal_from_precision(Engine& rng, const Vector& mean, const Matrix& precision_chol) {
  // precision = L L^T, so x = mean + L^{-T} e has covariance precision^{-1}.
  const Vector e = standard_normal_vector(rng, mean.size());
  return mean + precision_chol.transpose().triangularView<Eigen::Upper>().solve(e);
}

}  // namespace iwmm
