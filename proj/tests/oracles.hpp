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

// Independent reference computations for tests. Nothing here calls into the
// library's likelihood code; each quantity is computed from its textbook
// definition with a different factorization or by brute force.

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "iwmm/random.hpp"

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

inline Matrix random_matrix(iwmm::Engine& rng, Eigen::Index n, Eigen::Index q, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(n, q);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

inline Matrix random_spd(iwmm::Engine& rng, Eigen::Index q) {
  const Matrix a = random_matrix(rng, q, q);
  return a * a.transpose() + 0.5 * Matrix::Identity(q, q);
}

/// Squared-exponential Gram matrix with noise, written out element by element.
inline Matrix se_gram(const Matrix& x, double alpha, double ell, double beta) {
  const Eigen::Index n = x.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) d2 += std::pow(x(i, c) - x(j, c), 2);
      k(i, j) = alpha * std::exp(-d2 / (2.0 * ell * ell)) + (i == j ? 1.0 / beta : 0.0);
    }
  }
  return k;
}

/// Sum over columns of the zero-mean Gaussian log density, via LU.
inline double mvn_columns_logpdf(const Matrix& y, const Matrix& k) {
  Eigen::FullPivLU<Matrix> lu(k);
  const double logdet = std::log(std::abs(lu.determinant()));
  const Matrix kinv = lu.inverse();
  const double n = static_cast<double>(y.rows());
  double out = 0.0;
  for (Eigen::Index d = 0; d < y.cols(); ++d) {
    out += -0.5 * n * std::log(2.0 * kPi) - 0.5 * logdet -
           0.5 * y.col(d).dot(kinv * y.col(d));
  }
  return out;
}

inline double mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  Eigen::FullPivLU<Matrix> lu(cov);
  const Vector r = x - mean;
  return -0.5 * x.size() * std::log(2.0 * kPi) - 0.5 * std::log(std::abs(lu.determinant())) -
         0.5 * r.dot(lu.solve(r));
}

/// Multivariate Student-t log density with location m, scale matrix s, dof df.
inline double student_t_logpdf(const Vector& x, const Vector& m, const Matrix& s, double df) {
  const double q = static_cast<double>(x.size());
  Eigen::FullPivLU<Matrix> lu(s);
  const Vector r = x - m;
  const double delta = r.dot(lu.solve(r));
  return std::lgamma(0.5 * (df + q)) - std::lgamma(0.5 * df) - 0.5 * q * std::log(df * kPi) -
         0.5 * std::log(std::abs(lu.determinant())) - 0.5 * (df + q) * std::log1p(delta / df);
}

/// Posterior predictive of a Gaussian-Wishart model as a Student-t: points
/// are the cluster members so far.
inline double gw_predictive_student_t(const Vector& x, const Matrix& points, const Vector& u,
                                      double r, const Matrix& s, double nu) {
  const double n = static_cast<double>(points.rows());
  const Eigen::Index q = u.size();
  Vector mean = Vector::Zero(q);
  for (Eigen::Index i = 0; i < points.rows(); ++i) mean += points.row(i).transpose();
  Matrix scatter = Matrix::Zero(q, q);
  if (n > 0) {
    mean /= n;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const Vector d = points.row(i).transpose() - mean;
      scatter += d * d.transpose();
    }
  }
  const double rn = r + n;
  const double nun = nu + n;
  const Vector un = n > 0 ? Vector((r * u + n * mean) / rn) : u;
  Matrix sn = s + scatter;
  if (n > 0) sn += (r * n / rn) * (mean - u) * (mean - u).transpose();
  const double df = nun - static_cast<double>(q) + 1.0;
  const Matrix scale = sn * (rn + 1.0) / (rn * df);
  return student_t_logpdf(x, un, scale, df);
}

/// Gaussian-Wishart marginal as a chain of Student-t predictives.
inline double gw_marginal_chain(const Matrix& points, const Vector& u, double r, const Matrix& s,
                                double nu) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out += gw_predictive_student_t(points.row(i).transpose(), points.topRows(i), u, r, s, nu);
  }
  return out;
}

/// log p(Z) of the Chinese restaurant process by the sequential seating rule.
inline double crp_sequential(const std::vector<int>& z, double eta) {
  std::map<int, int> counts;
  double out = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto it = counts.find(z[i]);
    const double denom = static_cast<double>(i) + eta;
    out += std::log((it == counts.end() ? eta : static_cast<double>(it->second)) / denom);
    ++counts[z[i]];
  }
  return out;
}

/// Every set partition of {0..n-1} as a restricted growth string.
inline std::vector<std::vector<int>> all_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> z(n, 0);
  std::function<void(int, int)> rec = [&](int i, int max_label) {
    if (i == n) {
      out.push_back(z);
      return;
    }
    for (int c = 0; c <= max_label + 1; ++c) {
      z[i] = c;
      rec(i + 1, std::max(max_label, c));
    }
  };
  if (n == 0) return {{}};
  z[0] = 0;
  rec(1, 0);
  return out;
}

/// Canonical relabeling in order of first appearance.
inline std::vector<int> canonical(const std::vector<int>& z) {
  std::map<int, int> m;
  std::vector<int> out;
  for (int v : z) {
    auto it = m.find(v);
    if (it == m.end()) it = m.emplace(v, static_cast<int>(m.size())).first;
    out.push_back(it->second);
  }
  return out;
}

/// Central finite difference of f at x along every coordinate.
inline Matrix finite_diff(const std::function<double(const Matrix&)>& f, const Matrix& x,
                          double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Matrix xp = x, xm = x;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    g.data()[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Max over entries of |a - b| / max(|b|, floor).
inline double max_rel_error(const Matrix& a, const Matrix& b, double floor = 1e-6) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out = std::max(out, std::abs(a.data()[i] - b.data()[i]) / std::max(std::abs(b.data()[i]), floor));
  }
  return out;
}

/// Relative error of a gradient as a whole: |a - b| / max(|b|, floor).
inline double rel_error_norm(const Matrix& a, const Matrix& b, double floor = 1e-8) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

/// One-sample KS statistic against a CDF.
inline double ks_statistic(std::vector<double> a, const std::function<double(double)>& cdf) {
  std::sort(a.begin(), a.end());
  double d = 0.0;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

/// Upper tail of the chi-square distribution via the regularized gamma
/// function, by series/continued fraction.
inline double chi2_sf(double x, double k) {
  const double a = 0.5 * k;
  const double z = 0.5 * x;
  if (z <= 0) return 1.0;
  if (z < a + 1.0) {
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 1000; ++n) {
      term *= z / (a + n);
      sum += term;
      if (term < sum * 1e-15) break;
    }
    return 1.0 - std::exp(-z + a * std::log(z) - std::lgamma(a)) * sum;
  }
  double b = z + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-z + a * std::log(z) - std::lgamma(a)) * h;
}

}  // namespace oracle
