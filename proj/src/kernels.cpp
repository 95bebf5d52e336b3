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
#include "iwmm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace iwmm::kernels {

namespace {

inline double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index q = 0; q < a.cols(); ++q) {
    const double d = a(i, q) - b(j, q);
    s += d * d;
  }
  return s;
}

inline double gaussian_log_norm(Eigen::Index dim, double variance) {
  return -0.5 * static_cast<double>(dim) * (kLog2Pi + std::log(variance));
}

// Stable log-mean-exp over the values buffer.
inline double log_mean_exp(const double* v, Eigen::Index n) {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) m = std::max(m, v[k]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) s += std::exp(v[k] - m);
  return m + std::log(s / static_cast<double>(n));
}

inline double mixture_point(const Matrix& queries, Eigen::Index i, const Matrix& means,
                            const Vector& variances, std::vector<double>& buf) {
  const Eigen::Index k = means.rows();
  buf.resize(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) {
    const double v = variances(c);
    buf[c] = gaussian_log_norm(queries.cols(), v) - 0.5 * sq_dist(queries, i, means, c) / v;
  }
  return log_mean_exp(buf.data(), k);
}

inline double kde_loo_point(const Matrix& y, Eigen::Index n, double h, std::vector<double>& buf) {
  const Eigen::Index count = y.rows();
  const double var = h * h;
  const double norm = gaussian_log_norm(y.cols(), var);
  buf.clear();
  for (Eigen::Index m = 0; m < count; ++m) {
    if (m == n) continue;
    buf.push_back(norm - 0.5 * sq_dist(y, n, y, m) / var);
  }
  return log_mean_exp(buf.data(), static_cast<Eigen::Index>(buf.size()));
}

inline double kde_point(const Matrix& test, Eigen::Index i, const Matrix& train, double h,
                        std::vector<double>& buf) {
  const double var = h * h;
  const double norm = gaussian_log_norm(train.cols(), var);
  buf.resize(static_cast<std::size_t>(train.rows()));
  for (Eigen::Index m = 0; m < train.rows(); ++m) {
    buf[m] = norm - 0.5 * sq_dist(test, i, train, m) / var;
  }
  return log_mean_exp(buf.data(), train.rows());
}

}  // namespace

// ---------------------------------------------------------------------------
// Serial reference.

namespace serial {

void rbf_gram(const Matrix& x, double alpha, double ell, Matrix& rbf, Matrix* sqdist) {
  const Eigen::Index n = x.rows();
  const double inv2l2 = 1.0 / (2.0 * ell * ell);
  rbf.resize(n, n);
  if (sqdist) sqdist->resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rbf(i, i) = alpha;
    if (sqdist) (*sqdist)(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d2 = sq_dist(x, i, x, j);
      const double k = alpha * std::exp(-d2 * inv2l2);
      rbf(i, j) = k;
      rbf(j, i) = k;
      if (sqdist) {
        (*sqdist)(i, j) = d2;
        (*sqdist)(j, i) = d2;
      }
    }
  }
}

Matrix rbf_cross(const Matrix& xs, const Matrix& x, double alpha, double ell) {
  const double inv2l2 = 1.0 / (2.0 * ell * ell);
  Matrix out(xs.rows(), x.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      out(i, j) = alpha * std::exp(-sq_dist(xs, i, x, j) * inv2l2);
    }
  }
  return out;
}

Matrix rbf_grad_x(const Matrix& w, const Matrix& rbf, const Matrix& x, double ell) {
  const Eigen::Index n = x.rows();
  const Eigen::Index q = x.cols();
  const double scale = -2.0 / (ell * ell);
  Matrix out = Matrix::Zero(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double c = w(i, j) * rbf(i, j);
      for (Eigen::Index d = 0; d < q; ++d) out(i, d) += c * (x(i, d) - x(j, d));
    }
    out.row(i) *= scale;
  }
  return out;
}

Vector isotropic_mixture_log_density(const Matrix& queries, const Matrix& means,
                                     const Vector& variances) {
  Vector out(queries.rows());
  std::vector<double> buf;
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    out(i) = mixture_point(queries, i, means, variances, buf);
  }
  return out;
}

Vector kde_loo_log_density(const Matrix& y, double bandwidth) {
  Vector out(y.rows());
  std::vector<double> buf;
  for (Eigen::Index n = 0; n < y.rows(); ++n) out(n) = kde_loo_point(y, n, bandwidth, buf);
  return out;
}

Vector kde_log_density(const Matrix& test, const Matrix& train, double bandwidth) {
  Vector out(test.rows());
  std::vector<double> buf;
  for (Eigen::Index i = 0; i < test.rows(); ++i) out(i) = kde_point(test, i, train, bandwidth, buf);
  return out;
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP.

namespace omp {

void rbf_gram(const Matrix& x, double alpha, double ell, Matrix& rbf, Matrix* sqdist) {
  const Eigen::Index n = x.rows();
  const double inv2l2 = 1.0 / (2.0 * ell * ell);
  rbf.resize(n, n);
  if (sqdist) sqdist->resize(n, n);
  // Column-major: thread j owns column j, reading x rows only.
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) {
        rbf(i, i) = alpha;
        if (sqdist) (*sqdist)(i, i) = 0.0;
        continue;
      }
      const double d2 = sq_dist(x, std::max(i, j), x, std::min(i, j));
      rbf(i, j) = alpha * std::exp(-d2 * inv2l2);
      if (sqdist) (*sqdist)(i, j) = d2;
    }
  }
}

Matrix rbf_cross(const Matrix& xs, const Matrix& x, double alpha, double ell) {
  const double inv2l2 = 1.0 / (2.0 * ell * ell);
  Matrix out(xs.rows(), x.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      out(i, j) = alpha * std::exp(-sq_dist(xs, i, x, j) * inv2l2);
    }
  }
  return out;
}

Matrix rbf_grad_x(const Matrix& w, const Matrix& rbf, const Matrix& x, double ell) {
  const Eigen::Index n = x.rows();
  const Eigen::Index q = x.cols();
  const double scale = -2.0 / (ell * ell);
  Matrix out = Matrix::Zero(n, q);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double c = w(i, j) * rbf(i, j);
      for (Eigen::Index d = 0; d < q; ++d) out(i, d) += c * (x(i, d) - x(j, d));
    }
    out.row(i) *= scale;
  }
  return out;
}

Vector isotropic_mixture_log_density(const Matrix& queries, const Matrix& means,
                                     const Vector& variances) {
  Vector out(queries.rows());
#pragma omp parallel
  {
    std::vector<double> buf;
#pragma omp for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
      out(i) = mixture_point(queries, i, means, variances, buf);
    }
  }
  return out;
}

Vector kde_loo_log_density(const Matrix& y, double bandwidth) {
  Vector out(y.rows());
#pragma omp parallel
  {
    std::vector<double> buf;
#pragma omp for schedule(static)
    for (Eigen::Index n = 0; n < y.rows(); ++n) out(n) = kde_loo_point(y, n, bandwidth, buf);
  }
  return out;
}

Vector kde_log_density(const Matrix& test, const Matrix& train, double bandwidth) {
  Vector out(test.rows());
#pragma omp parallel
  {
    std::vector<double> buf;
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < test.rows(); ++i) out(i) = kde_point(test, i, train, bandwidth, buf);
  }
  return out;
}

}  // namespace omp

// ---------------------------------------------------------------------------

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void rbf_gram(const Matrix& x, double alpha, double ell, Matrix& rbf, Matrix* sqdist, Exec exec) {
  exec == Exec::parallel ? omp::rbf_gram(x, alpha, ell, rbf, sqdist)
                         : serial::rbf_gram(x, alpha, ell, rbf, sqdist);
}

Matrix rbf_cross(const Matrix& xs, const Matrix& x, double alpha, double ell, Exec exec) {
  return exec == Exec::parallel ? omp::rbf_cross(xs, x, alpha, ell)
                                : serial::rbf_cross(xs, x, alpha, ell);
}

Matrix rbf_grad_x(const Matrix& w, const Matrix& rbf, const Matrix& x, double ell, Exec exec) {
  return exec == Exec::parallel ? omp::rbf_grad_x(w, rbf, x, ell)
                                : serial::rbf_grad_x(w, rbf, x, ell);
}

Vector isotropic_mixture_log_density(const Matrix& queries, const Matrix& means,
                                     const Vector& variances, Exec exec) {
  return exec == Exec::parallel ? omp::isotropic_mixture_log_density(queries, means, variances)
                                : serial::isotropic_mixture_log_density(queries, means, variances);
}

Vector kde_loo_log_density(const Matrix& y, double bandwidth, Exec exec) {
  return exec == Exec::parallel ? omp::kde_loo_log_density(y, bandwidth)
                                : serial::kde_loo_log_density(y, bandwidth);
}

Vector kde_log_density(const Matrix& test, const Matrix& train, double bandwidth, Exec exec) {
  return exec == Exec::parallel ? omp::kde_log_density(test, train, bandwidth)
                                : serial::kde_log_density(test, train, bandwidth);
}

}  // namespace iwmm::kernels
