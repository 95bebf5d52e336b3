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

// Gaussian-process warping from latent to observed space: RBF + noise kernel,
// the marginal likelihood of Y given latent X with the mapping integrated
// out, its gradients, and the predictive distribution at new latent points.

#include <cmath>

#include "iwmm/common.hpp"
#include "iwmm/kernels.hpp"

namespace iwmm {

/// RBF hyperparameters stored in log space:
/// k(x, x') = alpha exp(-|x - x'|^2 / (2 ell^2)) + [same index] / beta.
struct KernelParams {
  double log_alpha = 0.0;
  double log_ell = 0.0;
  double log_beta = std::log(100.0);

  double alpha() const { return std::exp(log_alpha); }
  double ell() const { return std::exp(log_ell); }
  double beta() const { return std::exp(log_beta); }
  double noise_variance() const { return std::exp(-log_beta); }

  Eigen::Vector3d as_vector() const { return {log_alpha, log_ell, log_beta}; }
  static KernelParams from_vector(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }

  /// True when all exponentiated values are strictly positive and finite.
  bool valid() const;
  bool operator==(const KernelParams&) const = default;
};

/// Standard-normal prior on each log hyperparameter.
double kernel_log_prior(const KernelParams& p);
Eigen::Vector3d kernel_log_prior_grad(const KernelParams& p);

/// Gram matrix with its (possibly jittered) Cholesky factorization.
struct GramMatrix {
  Matrix values;          ///< exact kernel values, diagonal alpha + 1/beta
  Matrix rbf;             ///< values without the noise diagonal
  Eigen::LLT<Matrix> llt; ///< factor of values + jitter I
  double log_det = 0.0;
  double jitter = 0.0;    ///< diagonal jitter that was needed (0 normally)

  Matrix chol() const { return llt.matrixL(); }
};

double kernel_eval(const Vector& xn, const Vector& xm, bool same_index, const KernelParams& p);

/// Throws ConditioningError listing the jitter levels tried when even the
/// last escalation fails.
GramMatrix gram(const Matrix& x, const KernelParams& p, Exec exec = Exec::parallel);

struct GpEvaluation {
  double log_marginal = 0.0;
  Matrix grad_x;                                     ///< empty unless requested
  Eigen::Vector3d grad_theta = Eigen::Vector3d::Zero(); ///< zero unless requested
};

struct GpRequest {
  bool grad_x = false;
  bool grad_theta = false;
};

/// Likelihood and requested gradients sharing one Cholesky factorization.
GpEvaluation gp_evaluate(const Matrix& y, const Matrix& x, const KernelParams& p, GpRequest req,
                         Exec exec = Exec::parallel);

double gp_log_marginal(const Matrix& y, const Matrix& x, const KernelParams& p,
                       Exec exec = Exec::parallel);
Matrix gp_log_marginal_grad_x(const Matrix& y, const Matrix& x, const KernelParams& p,
                              Exec exec = Exec::parallel);
/// Gradient with respect to (log alpha, log ell, log beta).
Eigen::Vector3d gp_log_marginal_grad_theta(const Matrix& y, const Matrix& x, const KernelParams& p,
                                           Exec exec = Exec::parallel);

struct GpPrediction {
  Vector mean;
  double variance = 0.0;
};

/// Conditioned GP for repeated prediction against fixed training data.
class GpPosterior {
 public:
  GpPosterior(const Matrix& x, const Matrix& y, const KernelParams& p, Exec exec = Exec::parallel);

  GpPrediction predict(const Vector& x_star) const;
  /// Row i of means / entry i of variances for latent row i of xs.
  void predict_batch(const Matrix& xs, Matrix& means, Vector& variances) const;

  const GramMatrix& gram_matrix() const { return gram_; }

 private:
  Matrix x_;
  KernelParams params_;
  Exec exec_;
  GramMatrix gram_;
  Matrix kinv_y_;
};

GpPrediction gp_predict(const Vector& x_star, const Matrix& x, const Matrix& y,
                        const KernelParams& p);

}  // namespace iwmm
