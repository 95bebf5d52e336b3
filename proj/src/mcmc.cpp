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
#include "iwmm/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iwmm/log.hpp"

namespace iwmm {

// ---------------------------------------------------------------------------
// Configuration

std::vector<std::string> HmcConfig::violations(const std::string& prefix) const {
  std::vector<std::string> out;
  if (!(step_size > 0.0) || !std::isfinite(step_size)) out.push_back(prefix + ".step_size: must be > 0");
  if (num_leapfrog < 1) out.push_back(prefix + ".num_leapfrog: must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    out.push_back(prefix + ".target_accept: must lie in (0, 1)");
  }
  if (adapt_iters < -1) out.push_back(prefix + ".adapt_iters: must be >= 0 (or -1 for burn-in)");
  return out;
}

int SamplerConfig::resolved_latent_dim(Eigen::Index d) const {
  return mode == SamplerMode::igmm || latent_dim == 0 ? static_cast<int>(d) : latent_dim;
}

GWPrior SamplerConfig::resolved_prior(int q) const {
  GWPrior p = GWPrior::defaults(q);
  if (prior.u.size() > 0) p.u = prior.u;
  if (prior.s.size() > 0) p.s = prior.s;
  p.r = prior.r;
  if (prior.nu > 0.0) p.nu = prior.nu;
  p.eta = prior.eta;
  return p;
}

std::vector<std::string> SamplerConfig::violations(Eigen::Index data_dim) const {
  std::vector<std::string> out;
  if (total_iters < 1) out.emplace_back("sampler.total_iters: must be >= 1");
  if (burn_in < 0) out.emplace_back("sampler.burn_in: must be >= 0");
  if (burn_in >= total_iters) out.emplace_back("sampler.burn_in: must be < sampler.total_iters");
  if (thin < 1) out.emplace_back("sampler.thin: must be >= 1");
  if (latent_dim < 0) out.emplace_back("sampler.latent_dim: must be >= 0");
  if (data_dim > 0) {
    const int q = resolved_latent_dim(data_dim);
    if (q > data_dim) out.emplace_back("sampler.latent_dim: must not exceed the data dimension");
    if (mode == SamplerMode::igmm && latent_dim != 0 && latent_dim != data_dim) {
      out.emplace_back("sampler.latent_dim: igmm mode requires Q = D");
    }
    if (init == InitScheme::observed && q != data_dim) {
      out.emplace_back("sampler.init: 'observed' requires Q = D");
    }
    if (q >= 1 && q <= data_dim) {
      for (auto& v : resolved_prior(q).violations()) out.push_back(v);
    }
  }
  for (auto& v : hmc_x.violations("hmc_x")) out.push_back(v);
  for (auto& v : hmc_theta.violations("hmc_theta")) out.push_back(v);
  if (!kernel_init.valid()) out.emplace_back("kernel: initial hyperparameters must be finite");
  return out;
}

void SamplerConfig::validate(Eigen::Index data_dim) const {
  auto v = violations(data_dim);
  if (!v.empty()) throw ValidationError(std::move(v));
}

// ---------------------------------------------------------------------------
// Joint density

namespace {

struct XEval {
  double log_gp = 0.0;
  double log_mix = 0.0;
  Matrix grad;  // gradient of log_gp + log_mix
};

XEval eval_x(const Model& model, const Matrix& x, const Assignments& labels_only,
             const KernelParams& kernel, bool want_grad) {
  XEval ev;
  Assignments a = labels_only;
  a.rebuild(x, model.prior);
  ev.log_mix = log_marginal_x_given_z(x, a, model.prior);
  if (want_grad) {
    ev.grad.resize(x.rows(), x.cols());
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
      const Vector xn = x.row(n).transpose();
      ev.grad.row(n) = log_prior_grad_x(xn, a.stats(a.slot_of(static_cast<int>(n)))).transpose();
    }
  }
  if (model.mode == SamplerMode::iwmm) {
    const GpEvaluation gp = gp_evaluate(model.y, x, kernel, {.grad_x = want_grad}, model.exec);
    ev.log_gp = gp.log_marginal;
    if (want_grad) ev.grad += gp.grad_x;
  }
  return ev;
}

bool finite_eval(const XEval& ev) {
  return std::isfinite(ev.log_gp) && std::isfinite(ev.log_mix) &&
         (ev.grad.size() == 0 || ev.grad.allFinite());
}

}  // namespace

double x_potential(const Model& model, const Matrix& x, const Assignments& a,
                   const KernelParams& kernel, Matrix* grad) {
  XEval ev = eval_x(model, x, a, kernel, grad != nullptr);
  if (grad) *grad = -ev.grad;
  return -(ev.log_gp + ev.log_mix);
}

double theta_potential(const Model& model, const Matrix& x, const KernelParams& kernel,
                       Eigen::Vector3d* grad) {
  const GpEvaluation gp = gp_evaluate(model.y, x, kernel, {.grad_theta = grad != nullptr},
                                      model.exec);
  if (grad) *grad = -(gp.grad_theta + kernel_log_prior_grad(kernel));
  return -(gp.log_marginal + kernel_log_prior(kernel));
}

double log_joint(const Model& model, const ChainState& state) {
  const Assignments fresh(state.x, state.assignments.canonical_labels(), model.prior);
  double out = log_marginal_x_given_z(state.x, fresh, model.prior) +
               crp_log_prob(fresh, model.prior.eta);
  if (model.mode == SamplerMode::iwmm) {
    out += gp_log_marginal(model.y, state.x, state.kernel, model.exec);
  }
  return out;
}

void refresh_cache(const Model& model, ChainState& state) {
  state.assignments.rebuild(state.x, model.prior);
  state.log_mix = log_marginal_x_given_z(state.x, state.assignments, model.prior);
  state.log_crp = crp_log_prob(state.assignments, model.prior.eta);
  state.log_gp = model.mode == SamplerMode::iwmm
                     ? gp_log_marginal(model.y, state.x, state.kernel, model.exec)
                     : 0.0;
}

ChainState make_state(const Model& model, Matrix x, const std::vector<int>& labels,
                      const KernelParams& kernel, std::uint64_t seed) {
  ChainState s{.x = std::move(x), .assignments = {}, .kernel = kernel, .rng = RngStreams(seed)};
  s.assignments = Assignments(s.x, labels, model.prior);
  refresh_cache(model, s);
  return s;
}

// ---------------------------------------------------------------------------
// Gibbs

void gibbs_sweep(const Model& model, ChainState& state) {
  Assignments& a = state.assignments;
  for (int n = 0; n < a.num_points(); ++n) {
    const Vector xn = state.x.row(n).transpose();
    a.detach(n, xn, model.prior);
    const GibbsConditional cond = gibbs_conditional(xn, a, model.prior);
    const std::size_t k = sample_log_categorical(state.rng.gibbs, cond.log_weights);
    if (cond.slots[k] < 0) {
      a.attach_new(n, xn, model.prior);
    } else {
      a.attach(n, cond.slots[k], xn);
    }
  }
  // Drop accumulated rounding from the incremental updates.
  a.rebuild(state.x, model.prior);
  state.log_mix = log_marginal_x_given_z(state.x, a, model.prior);
  state.log_crp = crp_log_prob(a, model.prior.eta);
}

// ---------------------------------------------------------------------------
// HMC

namespace {

bool metropolis(Engine& rng, double delta_h, HmcResult& r) {
  r.delta_h = delta_h;
  r.accept_prob = delta_h <= 0.0 ? 1.0 : std::exp(-delta_h);
  r.accepted = uniform01(rng) < r.accept_prob;
  return r.accepted;
}

}  // namespace

HmcResult hmc_update_x(const Model& model, ChainState& state, double step_size, int num_leapfrog) {
  HmcResult r;
  if (model.mode != SamplerMode::iwmm) return r;
  Engine& rng = state.rng.hmc_x;
  const Eigen::Index n = state.x.rows();
  const Eigen::Index q = state.x.cols();

  Matrix p(n, q);
  for (Eigen::Index j = 0; j < q; ++j) p.col(j) = standard_normal_vector(rng, n);

  XEval cur = eval_x(model, state.x, state.assignments, state.kernel, true);
  const double h0 = -(cur.log_gp + cur.log_mix) + 0.5 * p.squaredNorm();

  Matrix x = state.x;
  XEval ev = cur;
  try {
    p += 0.5 * step_size * ev.grad;
    for (int l = 1; l <= num_leapfrog; ++l) {
      x += step_size * p;
      ev = eval_x(model, x, state.assignments, state.kernel, true);
      if (!finite_eval(ev)) throw ConditioningError("non-finite energy", {});
      p += (l < num_leapfrog ? 1.0 : 0.5) * step_size * ev.grad;
    }
  } catch (const ConditioningError&) {
    r.non_finite = true;
    r.delta_h = std::numeric_limits<double>::infinity();
    uniform01(rng);  // keep the stream aligned with the accept/reject draw
    return r;
  }
  const double h1 = -(ev.log_gp + ev.log_mix) + 0.5 * p.squaredNorm();
  if (!std::isfinite(h1)) {
    r.non_finite = true;
    r.delta_h = std::numeric_limits<double>::infinity();
    uniform01(rng);
    return r;
  }
  if (metropolis(rng, h1 - h0, r)) {
    state.x = std::move(x);
    state.assignments.rebuild(state.x, model.prior);
    state.log_gp = ev.log_gp;
    state.log_mix = ev.log_mix;
  }
  return r;
}

HmcResult hmc_update_theta(const Model& model, ChainState& state, double step_size,
                           int num_leapfrog) {
  HmcResult r;
  if (model.mode != SamplerMode::iwmm) return r;
  Engine& rng = state.rng.hmc_theta;
  Eigen::Vector3d p;
  for (int i = 0; i < 3; ++i) p(i) = standard_normal(rng);

  Eigen::Vector3d grad;
  const double u0 = theta_potential(model, state.x, state.kernel, &grad);
  const double h0 = u0 + 0.5 * p.squaredNorm();
  Eigen::Vector3d theta = state.kernel.as_vector();
  double u1 = u0;
  try {
    p -= 0.5 * step_size * grad;
    for (int l = 1; l <= num_leapfrog; ++l) {
      theta += step_size * p;
      const KernelParams k = KernelParams::from_vector(theta);
      if (!k.valid()) throw ConditioningError("kernel parameters left the valid range", {});
      u1 = theta_potential(model, state.x, k, &grad);
      if (!std::isfinite(u1) || !grad.allFinite()) throw ConditioningError("non-finite energy", {});
      p -= (l < num_leapfrog ? 1.0 : 0.5) * step_size * grad;
    }
  } catch (const ConditioningError&) {
    r.non_finite = true;
    r.delta_h = std::numeric_limits<double>::infinity();
    uniform01(rng);
    return r;
  }
  const double h1 = u1 + 0.5 * p.squaredNorm();
  if (metropolis(rng, h1 - h0, r)) {
    state.kernel = KernelParams::from_vector(theta);
    state.log_gp = gp_log_marginal(model.y, state.x, state.kernel, model.exec);
  }
  return r;
}

DualAveraging::DualAveraging(double initial_step, double target_accept)
    : mu_(std::log(10.0 * initial_step)), target_(target_accept), log_step_(std::log(initial_step)),
      log_step_bar_(std::log(initial_step)) {}

void DualAveraging::update(double accept_prob) {
  constexpr double kGamma = 0.05;
  constexpr double kT0 = 10.0;
  constexpr double kKappa = 0.75;
  ++m_;
  const double m = static_cast<double>(m_);
  const double w = 1.0 / (m + kT0);
  h_bar_ = (1.0 - w) * h_bar_ + w * (target_ - accept_prob);
  log_step_ = mu_ - std::sqrt(m) / kGamma * h_bar_;
  log_step_ = std::clamp(log_step_, std::log(1e-8), std::log(10.0));
  const double decay = std::pow(m, -kKappa);
  log_step_bar_ = decay * log_step_ + (1.0 - decay) * log_step_bar_;
}

// ---------------------------------------------------------------------------
// Prior simulation

Matrix sample_gp_outputs(const Matrix& x, const KernelParams& kernel, int d, Engine& rng) {
  const GramMatrix g = gram(x, kernel);
  Matrix e(x.rows(), d);
  for (int j = 0; j < d; ++j) e.col(j) = standard_normal_vector(rng, x.rows());
  return g.llt.matrixL() * e;
}

PriorSample sample_prior(int n, int q, int d, const GWPrior& prior, const KernelParams& kernel,
                         Engine& rng) {
  prior.validate();
  if (prior.dim() != q) throw InputShapeError("sample_prior: prior dimension differs from Q");
  PriorSample out;
  out.z.resize(n);
  std::vector<int> counts;
  for (int i = 0; i < n; ++i) {
    std::vector<double> lw;
    for (int c : counts) lw.push_back(std::log(static_cast<double>(c)));
    lw.push_back(std::log(prior.eta));
    const auto k = static_cast<int>(sample_log_categorical(rng, lw));
    if (k == static_cast<int>(counts.size())) counts.push_back(0);
    ++counts[k];
    out.z[i] = k;
  }

  const Matrix scale_chol = Eigen::LLT<Matrix>(prior.s.inverse()).matrixL();
  std::vector<Matrix> prec_chol;
  std::vector<Vector> means;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const Matrix r = sample_wishart(rng, scale_chol, prior.nu);
    const Matrix lr = Eigen::LLT<Matrix>(r).matrixL();
    means.push_back(sample_normal_from_precision(rng, prior.u, std::sqrt(prior.r) * lr));
    prec_chol.push_back(lr);
  }
  out.x.resize(n, q);
  for (int i = 0; i < n; ++i) {
    out.x.row(i) = sample_normal_from_precision(rng, means[out.z[i]], prec_chol[out.z[i]]).transpose();
  }
  out.y = d > 0 && n > 0 ? sample_gp_outputs(out.x, kernel, d, rng) : Matrix(n, d);
  return out;
}

PriorSample sample_prior(int n, int q, int d, const GWPrior& prior, const KernelParams& kernel,
                         std::uint64_t seed) {
  Engine rng = make_stream(seed, "prior");
  return sample_prior(n, q, d, prior, kernel, rng);
}

// ---------------------------------------------------------------------------
// Chain

Matrix initial_latent(const Matrix& centered_y, int q, InitScheme scheme) {
  const Eigen::Index d = centered_y.cols();
  if (scheme == InitScheme::observed || (scheme == InitScheme::automatic && q == d)) {
    if (q != d) throw ValidationError({"sampler.init: 'observed' requires Q = D"});
    return centered_y;
  }
  Eigen::BDCSVD<Matrix> svd(centered_y, Eigen::ComputeThinU);
  Matrix scores = svd.matrixU().leftCols(q) * svd.singularValues().head(q).asDiagonal();
  const double n = static_cast<double>(centered_y.rows());
  for (int j = 0; j < q; ++j) {
    const double var = n > 1 ? scores.col(j).squaredNorm() / (n - 1.0) : 0.0;
    if (var > 0.0) scores.col(j) /= std::sqrt(var);
  }
  return scores;
}

SampleArchive run_chain(const Dataset& data, const SamplerConfig& config) {
  if (data.size() == 0) throw ValidationError({"dataset: must contain at least one point"});
  config.validate(data.dim());
  const int q = config.resolved_latent_dim(data.dim());

  Model model{data.centered(), config.resolved_prior(q), config.mode, Exec::parallel};
  const bool warped = config.mode == SamplerMode::iwmm;
  Matrix x0 = warped ? initial_latent(model.y, q, config.init) : model.y;
  ChainState state = make_state(model, std::move(x0), std::vector<int>(data.size(), 0),
                                config.kernel_init, config.seed);

  SampleArchive archive;
  archive.mode = config.mode;
  archive.prior = model.prior;
  archive.y = model.y;
  archive.means = data.means;

  const int adapt_x = config.hmc_x.adapt_iters < 0 ? config.burn_in : config.hmc_x.adapt_iters;
  const int adapt_t =
      config.hmc_theta.adapt_iters < 0 ? config.burn_in : config.hmc_theta.adapt_iters;
  DualAveraging da_x(config.hmc_x.step_size, config.hmc_x.target_accept);
  DualAveraging da_t(config.hmc_theta.step_size, config.hmc_theta.target_accept);
  double step_x = config.hmc_x.step_size;
  double step_t = config.hmc_theta.step_size;

  for (int it = 1; it <= config.total_iters; ++it) {
    state.iter = it;
    DiagnosticsRow row;
    row.iter = it;
    try {
      gibbs_sweep(model, state);
      if (warped) {
        row.step_x = step_x;
        const HmcResult rx = hmc_update_x(model, state, step_x, config.hmc_x.num_leapfrog);
        row.accept_x = rx.accept_prob;
        archive.non_finite_rejects += rx.non_finite;
        if (it <= adapt_x) {
          da_x.update(rx.accept_prob);
          step_x = it == adapt_x ? da_x.final_step() : da_x.step();
        }
        if (config.sample_theta) {
          row.step_theta = step_t;
          const HmcResult rt =
              hmc_update_theta(model, state, step_t, config.hmc_theta.num_leapfrog);
          row.accept_theta = rt.accept_prob;
          archive.non_finite_rejects += rt.non_finite;
          if (it <= adapt_t) {
            da_t.update(rt.accept_prob);
            step_t = it == adapt_t ? da_t.final_step() : da_t.step();
          }
        }
      }
    } catch (const ConditioningError& e) {
      throw ConditioningError("iteration " + std::to_string(it) + ": " + e.what(),
                              e.attempted_jitter());
    }

    if (config.check_joint) {
      const double fresh = log_joint(model, state);
      if (std::abs(fresh - state.log_joint()) > 1e-8 * std::max(1.0, std::abs(fresh))) {
        throw std::logic_error("iteration " + std::to_string(it) +
                               ": cached log joint diverged from recomputation");
      }
    }

    row.log_joint = state.log_joint();
    row.num_clusters = state.assignments.num_clusters();
    archive.diagnostics.push_back(row);
    if (it > config.burn_in && (it - config.burn_in) % config.thin == 0) {
      archive.samples.push_back({it, state.x, state.assignments.canonical_labels(), state.kernel,
                                 state.log_joint()});
    }
    if (it % 500 == 0) {
      log::info("iteration " + std::to_string(it) + " C=" + std::to_string(row.num_clusters) +
                " log_joint=" + std::to_string(row.log_joint));
    }
  }
  return archive;
}

}  // namespace iwmm
