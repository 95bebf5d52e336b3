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

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp. Each output element
// is computed by a single thread with a fixed summation order, so both
// versions produce bit-identical results for any thread count.

#include "iwmm/common.hpp"

namespace iwmm {

enum class Exec { serial, parallel };

namespace kernels {

#define IWMM_KERNEL_DECLS                                                                       \
  /* rbf(n,m) = alpha * exp(-|x_n - x_m|^2 / (2 ell^2)); sqdist is optional. */                 \
  void rbf_gram(const Matrix& x, double alpha, double ell, Matrix& rbf, Matrix* sqdist);        \
  /* rbf(i,n) between rows of xs and rows of x. */                                              \
  Matrix rbf_cross(const Matrix& xs, const Matrix& x, double alpha, double ell);                \
  /* Row n: -(2/ell^2) sum_m w(n,m) rbf(n,m) (x_n - x_m), for symmetric w. */                   \
  Matrix rbf_grad_x(const Matrix& w, const Matrix& rbf, const Matrix& x, double ell);           \
  /* log of (1/K) sum_k N(q; means_k, variances_k I) for each query row q. */                  \
  Vector isotropic_mixture_log_density(const Matrix& queries, const Matrix& means,              \
                                       const Vector& variances);                                \
  /* Per-point leave-one-out log density of an isotropic Gaussian KDE. */                       \
  Vector kde_loo_log_density(const Matrix& y, double bandwidth);                                \
  /* Log density of the KDE built on train at each test row. */                                \
  Vector kde_log_density(const Matrix& test, const Matrix& train, double bandwidth);

namespace serial {
IWMM_KERNEL_DECLS
}  // namespace serial

namespace omp {
IWMM_KERNEL_DECLS
}  // namespace omp

#undef IWMM_KERNEL_DECLS

/// Number of OpenMP threads the parallel kernels use (1 without OpenMP).
int max_threads();

// Dispatchers.
void rbf_gram(const Matrix& x, double alpha, double ell, Matrix& rbf, Matrix* sqdist, Exec exec);
Matrix rbf_cross(const Matrix& xs, const Matrix& x, double alpha, double ell, Exec exec);
Matrix rbf_grad_x(const Matrix& w, const Matrix& rbf, const Matrix& x, double ell, Exec exec);
Vector isotropic_mixture_log_density(const Matrix& queries, const Matrix& means,
                                     const Vector& variances, Exec exec);
Vector kde_loo_log_density(const Matrix& y, double bandwidth, Exec exec);
Vector kde_log_density(const Matrix& test, const Matrix& train, double bandwidth, Exec exec);

}  // namespace kernels
}  // namespace iwmm
