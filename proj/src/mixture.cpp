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
#include "iwmm/mixture.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "iwmm/log.hpp"
#include "iwmm/random.hpp"

namespace iwmm {

namespace {

Matrix cholesky_or_throw(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw ConditioningError(what, {});
  return llt.matrixL();
}

double log_det_from_chol(const Matrix& l) { return 2.0 * l.diagonal().array().log().sum(); }

}  // namespace

// ---------------------------------------------------------------------------
// GWPrior

GWPrior GWPrior::defaults(int q) {
  GWPrior p;
  p.u = Vector::Zero(q);
  p.r = 1.0;
  p.s = Matrix::Identity(q, q);
  p.nu = q + 1.0;
  p.eta = 1.0;
  return p;
}

std::vector<std::string> GWPrior::violations() const {
  std::vector<std::string> out;
  const auto q = static_cast<double>(u.size());
  if (u.size() < 1) out.emplace_back("prior.u: dimension must be >= 1");
  if (s.rows() != u.size() || s.cols() != u.size()) {
    out.emplace_back("prior.S: must be " + std::to_string(u.size()) + "x" +
                     std::to_string(u.size()));
  } else if (s.size() > 0) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success || !s.isApprox(s.transpose())) {
      out.emplace_back("prior.S: must be symmetric positive definite");
    }
  }
  if (!(r > 0.0) || !std::isfinite(r)) out.emplace_back("prior.r: must be > 0");
  if (!(nu > q - 1.0) || !std::isfinite(nu)) out.emplace_back("prior.nu: must be > Q - 1");
  if (!(eta > 0.0) || !std::isfinite(eta)) out.emplace_back("prior.eta: must be > 0");
  return out;
}

void GWPrior::validate() const {
  auto v = violations();
  if (!v.empty()) throw ValidationError(std::move(v));
}

// ---------------------------------------------------------------------------
// Rank-one Cholesky modification.

bool cholesky_rank_one(Matrix& l, Vector v, double sign) {
  const Eigen::Index q = l.rows();
  for (Eigen::Index k = 0; k < q; ++k) {
    const double lkk = l(k, k);
    const double r2 = lkk * lkk + sign * v(k) * v(k);
    // Relative guard against cancellation in downdates.
    if (!(r2 > 1e-14 * lkk * lkk) || !std::isfinite(r2)) return false;
    const double r = std::sqrt(r2);
    const double c = r / lkk;
    const double s = v(k) / lkk;
    l(k, k) = r;
    for (Eigen::Index i = k + 1; i < q; ++i) {
      l(i, k) = (l(i, k) + sign * s * v(i)) / c;
      v(i) = c * v(i) - s * l(i, k);
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// ComponentStats

ComponentStats::ComponentStats(const GWPrior& prior)
    : count_(0),
      r_c_(prior.r),
      nu_c_(prior.nu),
      u_c_(prior.u),
      s_chol_(cholesky_or_throw(prior.s, "prior scale matrix is not positive definite")),
      sum_x_(Vector::Zero(prior.dim())),
      sum_xx_(Matrix::Zero(prior.dim(), prior.dim())) {
  refresh_log_det();
}

ComponentStats ComponentStats::from_points(const Matrix& points, const GWPrior& prior) {
  ComponentStats st(prior);
  if (points.rows() == 0) return st;
  if (points.cols() != prior.dim()) throw InputShapeError("from_points: dimension mismatch");
  const auto n = static_cast<double>(points.rows());
  st.count_ = static_cast<int>(points.rows());
  st.r_c_ = prior.r + n;
  st.nu_c_ = prior.nu + n;
  st.sum_x_ = points.colwise().sum().transpose();
  st.sum_xx_ = points.transpose() * points;
  st.u_c_ = (prior.r * prior.u + st.sum_x_) / st.r_c_;
  // Centered form of the same S_c for accuracy.
  const Vector mean = st.sum_x_ / n;
  const Matrix centered = points.rowwise() - mean.transpose();
  const Vector dm = mean - prior.u;
  Matrix sc = prior.s + centered.transpose() * centered +
              (prior.r * n / (prior.r + n)) * dm * dm.transpose();
  sc = 0.5 * (sc + sc.transpose()).eval();
  st.s_chol_ = cholesky_or_throw(sc, "component scatter is not positive definite");
  st.refresh_log_det();
  return st;
}

void ComponentStats::refresh_log_det() { log_det_ = log_det_from_chol(s_chol_); }

void ComponentStats::add(const Vector& x) {
  if (x.size() != u_c_.size()) throw InputShapeError("add_point: dimension mismatch");
  // S_c' = S_c + r_c / (r_c + 1) (x - u_c)(x - u_c)^T
  const double w = r_c_ / (r_c_ + 1.0);
  const Vector v = std::sqrt(w) * (x - u_c_);
  if (!cholesky_rank_one(s_chol_, v, +1.0)) {
    // An update cannot lose definiteness; only non-finite input gets here.
    throw InputShapeError("add_point: non-finite coordinates");
  }
  u_c_ = (r_c_ * u_c_ + x) / (r_c_ + 1.0);
  r_c_ += 1.0;
  nu_c_ += 1.0;
  ++count_;
  sum_x_ += x;
  sum_xx_.noalias() += x * x.transpose();
  refresh_log_det();
}

void ComponentStats::remove(const Vector& x, const GWPrior& prior) {
  if (count_ == 0) throw std::logic_error("remove_point: component is empty");
  if (x.size() != u_c_.size()) throw InputShapeError("remove_point: dimension mismatch");
  if (count_ == 1) {
    *this = ComponentStats(prior);
    return;
  }
  // S_c = S_c' - r_c' / (r_c' - 1) (x - u_c')(x - u_c')^T
  const double w = r_c_ / (r_c_ - 1.0);
  const Vector v = std::sqrt(w) * (x - u_c_);
  u_c_ = (r_c_ * u_c_ - x) / (r_c_ - 1.0);
  r_c_ -= 1.0;
  nu_c_ -= 1.0;
  --count_;
  sum_x_ -= x;
  sum_xx_.noalias() -= x * x.transpose();
  Matrix l = s_chol_;
  if (cholesky_rank_one(l, v, -1.0)) {
    s_chol_ = std::move(l);
    refresh_log_det();
  } else {
    ++refactorizations_;
    log::debug("remove_point: Cholesky downdate unstable, refactorizing");
    rebuild_from_sums(prior);
  }
}

void ComponentStats::rebuild_from_sums(const GWPrior& prior) {
  u_c_ = (prior.r * prior.u + sum_x_) / r_c_;
  Matrix sc = prior.s + sum_xx_ + prior.r * prior.u * prior.u.transpose() -
              r_c_ * u_c_ * u_c_.transpose();
  sc = 0.5 * (sc + sc.transpose()).eval();
  s_chol_ = cholesky_or_throw(sc, "component scatter is not positive definite");
  refresh_log_det();
}

ComponentStats add_point(ComponentStats stats, const Vector& x) {
  stats.add(x);
  return stats;
}

ComponentStats remove_point(ComponentStats stats, const Vector& x, const GWPrior& prior) {
  stats.remove(x, prior);
  return stats;
}

// ---------------------------------------------------------------------------
// Densities.

double component_log_marginal(const ComponentStats& stats, const GWPrior& prior) {
  if (stats.count() == 0) return 0.0;
  const auto q = static_cast<double>(prior.dim());
  const auto n = static_cast<double>(stats.count());
  const double log_det_prior =
      log_det_from_chol(cholesky_or_throw(prior.s, "prior scale matrix is not positive definite"));
  double out = -0.5 * n * q * kLogPi + 0.5 * q * (std::log(prior.r) - std::log(stats.r_c())) +
               0.5 * prior.nu * log_det_prior - 0.5 * stats.nu_c() * stats.log_det_s();
  for (Eigen::Index d = 1; d <= prior.dim(); ++d) {
    const auto dd = static_cast<double>(d);
    out += std::lgamma(0.5 * (stats.nu_c() + 1.0 - dd)) - std::lgamma(0.5 * (prior.nu + 1.0 - dd));
  }
  return out;
}

double log_pred_in_component(const Vector& x, const ComponentStats& stats, const GWPrior& prior) {
  if (x.size() != prior.dim()) throw InputShapeError("log_pred_in_component: dimension mismatch");
  const Eigen::Index q = prior.dim();
  const double rc = stats.r_c();
  const double nuc = stats.nu_c();
  // |S_c'| = |S_c| (1 + w v^T S_c^{-1} v), matrix determinant lemma.
  const Vector t = stats.s_chol().triangularView<Eigen::Lower>().solve(x - stats.u_c());
  const double w = rc / (rc + 1.0);
  const double log_det_new = stats.log_det_s() + std::log1p(w * t.squaredNorm());
  double out = -0.5 * static_cast<double>(q) * kLogPi +
               0.5 * static_cast<double>(q) * (std::log(rc) - std::log(rc + 1.0)) +
               0.5 * nuc * stats.log_det_s() - 0.5 * (nuc + 1.0) * log_det_new;
  for (Eigen::Index d = 1; d <= q; ++d) {
    const auto dd = static_cast<double>(d);
    out += std::lgamma(0.5 * (nuc + 2.0 - dd)) - std::lgamma(0.5 * (nuc + 1.0 - dd));
  }
  return out;
}

Vector log_prior_grad_x(const Vector& x, const ComponentStats& stats) {
  const auto& l = stats.s_chol();
  Vector v = l.triangularView<Eigen::Lower>().solve(x - stats.u_c());
  v = l.transpose().triangularView<Eigen::Upper>().solve(v);
  return -stats.nu_c() * v;
}

// ---------------------------------------------------------------------------
// Assignments

Assignments::Assignments(const Matrix& x, const std::vector<int>& labels, const GWPrior& prior) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw InputShapeError("Assignments: label count differs from point count");
  }
  std::map<int, int> slot_for;
  z_.resize(labels.size());
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < 0) throw InputShapeError("Assignments: negative label");
    auto [it, inserted] = slot_for.try_emplace(labels[n], static_cast<int>(slot_for.size()));
    z_[n] = it->second;
  }
  slots_.assign(slot_for.size(), ComponentStats(prior));
  active_.assign(slot_for.size(), true);
  num_active_ = static_cast<int>(slot_for.size());
  rebuild(x, prior);
}

void Assignments::rebuild(const Matrix& x, const GWPrior& prior) {
  std::vector<std::vector<Eigen::Index>> members(slots_.size());
  for (std::size_t n = 0; n < z_.size(); ++n) {
    if (z_[n] >= 0) members[z_[n]].push_back(static_cast<Eigen::Index>(n));
  }
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (!active_[s]) continue;
    Matrix pts(static_cast<Eigen::Index>(members[s].size()), x.cols());
    for (std::size_t i = 0; i < members[s].size(); ++i) pts.row(i) = x.row(members[s][i]);
    slots_[s] = ComponentStats::from_points(pts, prior);
  }
}

std::vector<int> Assignments::active_slots() const {
  std::vector<int> out;
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (active_[s]) out.push_back(static_cast<int>(s));
  }
  return out;
}

std::vector<int> Assignments::counts() const {
  std::vector<int> out;
  for (int s : active_slots()) out.push_back(slots_[s].count());
  return out;
}

void Assignments::detach(int n, const Vector& x, const GWPrior& prior) {
  const int s = z_[n];
  if (s < 0) throw std::logic_error("detach: point already detached");
  slots_[s].remove(x, prior);
  z_[n] = -1;
  if (slots_[s].count() == 0) {
    active_[s] = false;
    free_.push_back(s);
    --num_active_;
  }
}

void Assignments::attach(int n, int slot, const Vector& x) {
  if (z_[n] >= 0) throw std::logic_error("attach: point already attached");
  if (slot < 0 || slot >= static_cast<int>(slots_.size()) || !active_[slot]) {
    throw std::logic_error("attach: inactive slot");
  }
  slots_[slot].add(x);
  z_[n] = slot;
}

int Assignments::attach_new(int n, const Vector& x, const GWPrior& prior) {
  if (z_[n] >= 0) throw std::logic_error("attach_new: point already attached");
  int s;
  if (!free_.empty()) {
    s = free_.back();
    free_.pop_back();
    slots_[s] = ComponentStats(prior);
    active_[s] = true;
  } else {
    s = static_cast<int>(slots_.size());
    slots_.emplace_back(prior);
    active_.push_back(true);
  }
  ++num_active_;
  slots_[s].add(x);
  z_[n] = s;
  return s;
}

std::vector<int> Assignments::canonical_labels() const {
  std::map<int, int> relabel;
  std::vector<int> out(z_.size(), -1);
  for (std::size_t n = 0; n < z_.size(); ++n) {
    if (z_[n] < 0) continue;
    auto [it, inserted] = relabel.try_emplace(z_[n], static_cast<int>(relabel.size()));
    out[n] = it->second;
  }
  return out;
}

double log_marginal_x_given_z(const Matrix&, const Assignments& a, const GWPrior& prior) {
  double out = 0.0;
  for (int s : a.active_slots()) out += component_log_marginal(a.stats(s), prior);
  return out;
}

double log_marginal_x_given_z(const Matrix& x, const std::vector<int>& labels,
                              const GWPrior& prior) {
  if (labels.empty()) return 0.0;
  return log_marginal_x_given_z(x, Assignments(x, labels, prior), prior);
}

double crp_log_prob(const std::vector<int>& counts, double eta) {
  double n = 0.0;
  double out = 0.0;
  for (int c : counts) {
    if (c <= 0) continue;
    n += c;
    out += std::log(eta) + std::lgamma(static_cast<double>(c));
  }
  if (n == 0.0) return 0.0;
  // eta (eta + 1) ... (eta + N - 1) = Gamma(eta + N) / Gamma(eta)
  return out - (std::lgamma(eta + n) - std::lgamma(eta));
}

double crp_log_prob(const Assignments& a, double eta) { return crp_log_prob(a.counts(), eta); }

GibbsWeights crp_gibbs_weights(const Assignments& a, double eta) {
  GibbsWeights w;
  for (int s : a.active_slots()) {
    w.slots.push_back(s);
    w.counts.push_back(static_cast<double>(a.stats(s).count()));
  }
  w.new_cluster = eta;
  return w;
}

GibbsConditional gibbs_conditional(const Vector& x, const Assignments& a, const GWPrior& prior) {
  const GibbsWeights w = crp_gibbs_weights(a, prior.eta);
  GibbsConditional out;
  out.slots = w.slots;
  out.slots.push_back(-1);
  out.log_weights.reserve(out.slots.size());
  for (std::size_t k = 0; k < w.slots.size(); ++k) {
    out.log_weights.push_back(std::log(w.counts[k]) +
                              log_pred_in_component(x, a.stats(w.slots[k]), prior));
  }
  out.log_weights.push_back(std::log(w.new_cluster) +
                            log_pred_in_component(x, ComponentStats(prior), prior));
  const double lse = log_sum_exp(out.log_weights);
  for (double lw : out.log_weights) out.probabilities.push_back(std::exp(lw - lse));
  return out;
}

}  // namespace iwmm
