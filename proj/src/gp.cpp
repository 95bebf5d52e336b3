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
#include "iwmm/gp.hpp"

#include <algorithm>
#include <sstream>

namespace iwmm {

bool KernelParams::valid() const {
  for (double v : {log_alpha, log_ell, log_beta}) {
    const double e = std::exp(v);
    if (!std::isfinite(v) || !std::isfinite(e) || !(e > 0.0)) return false;
  }
  return true;
}

double kernel_log_prior(const KernelParams& p) {
  const Eigen::Vector3d v = p.as_vector();
  return -0.5 * v.squaredNorm() - 1.5 * kLog2Pi;
}

Eigen::Vector3d kernel_log_prior_grad(const KernelParams& p) { return -p.as_vector(); }

double kernel_eval(const Vector& xn, const Vector& xm, bool same_index, const KernelParams& p) {
  if (xn.size() != xm.size() || xn.size() < 1) {
    throw InputShapeError("kernel_eval: latent points have dimensions " +
                          std::to_string(xn.size()) + " and " + std::to_string(xm.size()));
  }
  const double d2 = (xn - xm).squaredNorm();
  const double ell = p.ell();
  double k = p.alpha() * std::exp(-d2 / (2.0 * ell * ell));
  if (same_index) k += p.noise_variance();
  return k;
}

GramMatrix gram(const Matrix& x, const KernelParams& p, Exec exec) {
  if (x.rows() < 1 || x.cols() < 1) throw InputShapeError("gram: empty latent matrix");
  if (!x.allFinite()) throw InputShapeError("gram: non-finite latent coordinates");
  GramMatrix g;
  kernels::rbf_gram(x, p.alpha(), p.ell(), g.rbf, nullptr, exec);
  g.values = g.rbf;
  g.values.diagonal().array() += p.noise_variance();

  auto factored = [&g] {
    if (g.llt.info() != Eigen::Success) return false;
    const auto diag = g.llt.matrixLLT().diagonal().array();
    return diag.isFinite().all() && (diag > 0.0).all();
  };
  g.llt.compute(g.values);
  if (!factored()) {
    const double mean_diag = g.values.diagonal().mean();
    std::vector<double> tried;
    double jitter = 1e-10 * mean_diag;
    bool ok = false;
    for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
      tried.push_back(jitter);
      Matrix jittered = g.values;
      jittered.diagonal().array() += jitter;
      g.llt.compute(jittered);
      if (factored()) {
        g.jitter = jitter;
        ok = true;
        break;
      }
    }
    if (!ok) {
      std::ostringstream msg;
      msg << "gram: Cholesky failed after jitter";
      for (double j : tried) msg << ' ' << j;
      throw ConditioningError(msg.str(), tried);
    }
  }
  const auto& lmat = g.llt.matrixLLT();
  g.log_det = 2.0 * lmat.diagonal().array().log().sum();
  return g;
}

GpEvaluation gp_evaluate(const Matrix& y, const Matrix& x, const KernelParams& p, GpRequest req,
                         Exec exec) {
  if (y.rows() != x.rows()) {
    throw InputShapeError("gp: Y has " + std::to_string(y.rows()) + " rows but X has " +
                          std::to_string(x.rows()));
  }
  const auto n = static_cast<double>(y.rows());
  const auto d = static_cast<double>(y.cols());
  const GramMatrix g = gram(x, p, exec);

  GpEvaluation out;
  const Matrix half = g.llt.matrixL().solve(y);  // L^{-1} Y
  out.log_marginal = -0.5 * d * n * kLog2Pi - 0.5 * d * g.log_det - 0.5 * half.squaredNorm();
  if (!req.grad_x && !req.grad_theta) return out;

  // dL/dK = -(D/2) K^{-1} + 1/2 K^{-1} Y Y^T K^{-1}.
  const Matrix kinv = g.llt.solve(Matrix::Identity(y.rows(), y.rows()));
  const Matrix kinv_y = g.llt.solve(y);
  Matrix dl_dk = -0.5 * d * kinv;
  dl_dk.noalias() += 0.5 * kinv_y * kinv_y.transpose();
  dl_dk = 0.5 * (dl_dk + dl_dk.transpose()).eval();

  if (req.grad_x) out.grad_x = kernels::rbf_grad_x(dl_dk, g.rbf, x, p.ell(), exec);

  if (req.grad_theta) {
    Matrix rbf, sqdist;
    kernels::rbf_gram(x, p.alpha(), p.ell(), rbf, &sqdist, exec);
    const double ell2 = p.ell() * p.ell();
    out.grad_theta(0) = (dl_dk.array() * g.rbf.array()).sum();
    out.grad_theta(1) = (dl_dk.array() * g.rbf.array() * sqdist.array()).sum() / ell2;
    out.grad_theta(2) = -p.noise_variance() * dl_dk.trace();
  }
  return out;
}

double gp_log_marginal(const Matrix& y, const Matrix& x, const KernelParams& p, Exec exec) {
  return gp_evaluate(y, x, p, {}, exec).log_marginal;
}

Matrix gp_log_marginal_grad_x(const Matrix& y, const Matrix& x, const KernelParams& p, Exec exec) {
  return gp_evaluate(y, x, p, {.grad_x = true}, exec).grad_x;
}

Eigen::Vector3d gp_log_marginal_grad_theta(const Matrix& y, const Matrix& x, const KernelParams& p,
                                           Exec exec) {
  return gp_evaluate(y, x, p, {.grad_theta = true}, exec).grad_theta;
}

GpPosterior::GpPosterior(const Matrix& x, const Matrix& y, const KernelParams& p, Exec exec)
    : x_(x), params_(p), exec_(exec), gram_(gram(x, p, exec)) {
  if (y.rows() != x.rows()) throw InputShapeError("GpPosterior: X and Y row counts differ");
  kinv_y_ = gram_.llt.solve(y);
}

void GpPosterior::predict_batch(const Matrix& xs, Matrix& means, Vector& variances) const {
  if (xs.cols() != x_.cols()) throw InputShapeError("predict: latent dimension mismatch");
  const Matrix ks = kernels::rbf_cross(xs, x_, params_.alpha(), params_.ell(), exec_);
  means.noalias() = ks * kinv_y_;
  const Matrix v = gram_.llt.matrixL().solve(ks.transpose());
  const double prior_var = params_.alpha() + params_.noise_variance();
  // The exact predictive variance of a noisy observation is at least 1/beta.
  variances = (prior_var - v.colwise().squaredNorm().array())
                  .max(params_.noise_variance())
                  .matrix()
                  .transpose();
}

GpPrediction GpPosterior::predict(const Vector& x_star) const {
  Matrix means;
  Vector vars;
  predict_batch(x_star.transpose(), means, vars);
  return {means.row(0).transpose(), vars(0)};
}

GpPrediction gp_predict(const Vector& x_star, const Matrix& x, const Matrix& y,
                        const KernelParams& p) {
  return GpPosterior(x, y, p).predict(x_star);
}

}  // namespace iwmm
