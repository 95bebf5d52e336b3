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
#include <numeric>

#include "doctest.h"
#include "iwmm/mixture.hpp"
#include "oracles.hpp"

using namespace iwmm;

namespace {

GWPrior scalar_prior() {
  GWPrior p = GWPrior::defaults(1);
  p.nu = 3.0;
  return p;
}

GWPrior random_prior(Engine& rng, int q) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  GWPrior p;
  p.u = oracle::random_matrix(rng, q, 1, 0.5);
  p.r = u(rng);
  p.s = oracle::random_spd(rng, q);
  p.nu = q - 1.0 + u(rng) + 0.5;
  p.eta = u(rng);
  return p;
}

std::vector<int> random_labels(Engine& rng, int n, int max_c) {
  std::uniform_int_distribution<int> d(0, max_c - 1);
  std::vector<int> z(n);
  for (int& v : z) v = d(rng);
  return z;
}

double log_joint_labels(const Matrix& x, const std::vector<int>& z, const GWPrior& p) {
  std::map<int, int> counts;
  for (int v : z) ++counts[v];
  std::vector<int> c;
  for (auto& [k, v] : counts) c.push_back(v);
  return log_marginal_x_given_z(x, z, p) + crp_log_prob(c, p.eta);
}

}  // namespace

TEST_CASE("prior defaults and validation") {
  const GWPrior p = GWPrior::defaults(3);
  CHECK(p.u.isZero());
  CHECK(p.r == 1.0);
  CHECK(p.s.isIdentity());
  CHECK(p.nu == 4.0);
  CHECK(p.eta == 1.0);
  CHECK(p.violations().empty());

  GWPrior bad = p;
  bad.r = 0.0;
  bad.nu = 1.5;
  bad.eta = -1.0;
  bad.s(0, 0) = -1.0;
  CHECK(bad.violations().size() == 4);
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("adding one scalar point gives the hand-computed posterior") {
  const GWPrior p = scalar_prior();
  ComponentStats s(p);
  s.add(Vector::Constant(1, 2.0));
  CHECK(s.count() == 1);
  CHECK(s.r_c() == 2.0);
  CHECK(s.nu_c() == 4.0);
  CHECK(s.u_c()(0) == doctest::Approx(1.0));
  CHECK(s.scatter()(0, 0) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("scalar marginal for one point at the origin") {
  const GWPrior p = scalar_prior();
  const Matrix x = Matrix::Zero(1, 1);
  const double expect = -0.5 * std::log(oracle::kPi) - 0.5 * std::log(2.0) - std::lgamma(1.5);
  CHECK(log_marginal_x_given_z(x, std::vector<int>{0}, p) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(log_pred_in_component(Vector::Zero(1), ComponentStats(p), p) ==
        doctest::Approx(expect).epsilon(1e-14));
  CHECK(log_marginal_x_given_z(Matrix(0, 1), std::vector<int>{}, p) == 0.0);
}

TEST_CASE("sequential adds match batch statistics") {
  Engine rng = make_stream(1, "mix");
  const GWPrior p = random_prior(rng, 3);
  const Matrix x = oracle::random_matrix(rng, 50, 3, 2.0);
  ComponentStats s(p);
  for (int i = 0; i < 50; ++i) s.add(x.row(i).transpose());
  const ComponentStats b = ComponentStats::from_points(x, p);
  // The definition written out: S + sum x x^T + r u u^T - r_c u_c u_c^T.
  const double rc = p.r + 50;
  const Vector uc = (p.r * p.u + x.colwise().sum().transpose()) / rc;
  const Matrix def = p.s + x.transpose() * x + p.r * p.u * p.u.transpose() - rc * uc * uc.transpose();
  CHECK(oracle::max_rel_error(s.scatter(), def, 1e-3) < 1e-8);
  CHECK(oracle::max_rel_error(b.scatter(), def, 1e-3) < 1e-8);
  CHECK((s.u_c() - uc).norm() < 1e-12);
  CHECK(s.r_c() == rc);
  CHECK(s.nu_c() == p.nu + 50);
}

TEST_CASE("add and remove round-trip; removing the sole point restores the prior") {
  Engine rng = make_stream(2, "mix");
  const GWPrior p = random_prior(rng, 2);
  const Matrix x = oracle::random_matrix(rng, 6, 2);
  ComponentStats s = ComponentStats::from_points(x.topRows(5), p);
  const ComponentStats before = s;
  s = remove_point(add_point(s, x.row(5).transpose()), x.row(5).transpose(), p);
  CHECK(oracle::max_rel_error(s.scatter(), before.scatter(), 1e-3) < 1e-10);
  CHECK((s.u_c() - before.u_c()).norm() < 1e-10);

  ComponentStats one(p);
  one.add(x.row(0).transpose());
  one.remove(x.row(0).transpose(), p);
  CHECK(one.count() == 0);
  CHECK(one.r_c() == p.r);
  CHECK(one.nu_c() == p.nu);
  CHECK(one.u_c() == p.u);
  CHECK(one.scatter() == ComponentStats(p).scatter());
  CHECK_THROWS_AS(one.remove(x.row(0).transpose(), p), std::logic_error);
}

TEST_CASE("100 interleaved add/remove operations match batch recomputation") {
  Engine rng = make_stream(3, "mix");
  const GWPrior p = random_prior(rng, 3);
  const Matrix pool = oracle::random_matrix(rng, 40, 3, 3.0);
  ComponentStats s(p);
  std::vector<int> members;
  std::uniform_int_distribution<int> pick(0, 39);
  for (int op = 0; op < 100; ++op) {
    if (!members.empty() && uniform01(rng) < 0.4) {
      const std::size_t k = static_cast<std::size_t>(pick(rng)) % members.size();
      s.remove(pool.row(members[k]).transpose(), p);
      members.erase(members.begin() + static_cast<long>(k));
    } else {
      const int i = pick(rng);
      s.add(pool.row(i).transpose());
      members.push_back(i);
    }
  }
  Matrix pts(static_cast<long>(members.size()), 3);
  for (std::size_t k = 0; k < members.size(); ++k) pts.row(static_cast<long>(k)) = pool.row(members[k]);
  const ComponentStats b = ComponentStats::from_points(pts, p);
  CHECK(s.count() == b.count());
  CHECK(oracle::max_rel_error(s.scatter(), b.scatter(), 1e-3) < 1e-8);
  CHECK(s.log_det_s() == doctest::Approx(b.log_det_s()).epsilon(1e-8));
}

TEST_CASE("rank-one Cholesky modification") {
  Engine rng = make_stream(4, "mix");
  const Matrix a = oracle::random_spd(rng, 4);
  Matrix l = Eigen::LLT<Matrix>(a).matrixL();
  const Vector v = oracle::random_matrix(rng, 4, 1);
  REQUIRE(cholesky_rank_one(l, v, 1.0));
  CHECK(oracle::max_rel_error(l * l.transpose(), a + v * v.transpose(), 1e-3) < 1e-12);
  REQUIRE(cholesky_rank_one(l, v, -1.0));
  CHECK(oracle::max_rel_error(l * l.transpose(), a, 1e-3) < 1e-11);
  Matrix eye = Matrix::Identity(2, 2);
  CHECK_FALSE(cholesky_rank_one(eye, Vector::Constant(2, 1.0), -1.0));
}

TEST_CASE("predictive equals the Student-t oracle") {
  Engine rng = make_stream(5, "mix");
  for (int inst = 0; inst < 20; ++inst) {
    const int q = 1 + inst % 3;
    const GWPrior p = random_prior(rng, q);
    const int n = inst % 7;
    const Matrix pts = oracle::random_matrix(rng, n, q);
    const Vector x = oracle::random_matrix(rng, q, 1);
    const ComponentStats s = ComponentStats::from_points(pts, p);
    CHECK(log_pred_in_component(x, s, p) ==
          doctest::Approx(oracle::gw_predictive_student_t(x, pts, p.u, p.r, p.s, p.nu)).epsilon(1e-10));
  }
}

TEST_CASE("scalar predictive integrates to one") {
  GWPrior p = scalar_prior();
  const Matrix pts = (Matrix(3, 1) << 0.5, -0.2, 1.1).finished();
  const ComponentStats s = ComponentStats::from_points(pts, p);
  double mass = 0.0;
  for (double x = -20.0; x <= 20.0; x += 1e-3) {
    mass += std::exp(log_pred_in_component(Vector::Constant(1, x), s, p)) * 1e-3;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
  mass = 0.0;
  for (double x = -20.0; x <= 20.0; x += 1e-3) {
    mass += std::exp(log_pred_in_component(Vector::Constant(1, x), ComponentStats(p), p)) * 1e-3;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("collapsed marginal equals the chain of predictives in any order") {
  Engine rng = make_stream(6, "mix");
  for (int inst = 0; inst < 30; ++inst) {
    const int q = 1 + inst % 3;
    const int n = 2 + inst % 12;
    const GWPrior p = random_prior(rng, q);
    const Matrix x = oracle::random_matrix(rng, n, q);
    const std::vector<int> z = random_labels(rng, n, 3);
    double chain = 0.0;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int c = 0; c < 3; ++c) {
      std::vector<int> idx;
      for (int i : order) {
        if (z[i] == c) idx.push_back(i);
      }
      Matrix pts(static_cast<long>(idx.size()), q);
      for (std::size_t k = 0; k < idx.size(); ++k) pts.row(static_cast<long>(k)) = x.row(idx[k]);
      chain += oracle::gw_marginal_chain(pts, p.u, p.r, p.s, p.nu);
    }
    CHECK(log_marginal_x_given_z(x, z, p) == doctest::Approx(chain).epsilon(1e-10));
  }
}

TEST_CASE("latent prior gradient matches finite differences") {
  Engine rng = make_stream(7, "mix");
  const GWPrior p = random_prior(rng, 2);
  const Matrix x = oracle::random_matrix(rng, 8, 2);
  const std::vector<int> z{0, 0, 1, 1, 1, 0, 2, 1};
  const Assignments a(x, z, p);
  Matrix grad(8, 2);
  for (int n = 0; n < 8; ++n) {
    grad.row(n) = log_prior_grad_x(x.row(n).transpose(), a.stats(a.slot_of(n))).transpose();
  }
  const Matrix fd =
      oracle::finite_diff([&](const Matrix& xx) { return log_marginal_x_given_z(xx, z, p); }, x);
  CHECK(oracle::rel_error_norm(grad, fd) < 1e-4);

  const ComponentStats& s = a.stats(a.slot_of(0));
  CHECK(log_prior_grad_x(s.u_c(), s).isZero());
  const Vector d = (Vector(2) << 0.3, -0.7).finished();
  CHECK((log_prior_grad_x(s.u_c() + 2 * d, s) - 2 * log_prior_grad_x(s.u_c() + d, s)).norm() < 1e-12);
}

TEST_CASE("CRP probabilities") {
  CHECK(crp_log_prob(std::vector<int>{1}, 1.7) == doctest::Approx(0.0));
  CHECK(crp_log_prob(std::vector<int>{2}, 1.0) == doctest::Approx(std::log(0.5)));
  for (double eta : {0.5, 1.0, 2.0}) {
    for (int n : {3, 5, 8}) {
      double total = 0.0;
      for (const auto& z : oracle::all_partitions(n)) {
        std::vector<int> counts(n, 0);
        for (int v : z) ++counts[v];
        const double lp = crp_log_prob(counts, eta);
        CHECK(lp == doctest::Approx(oracle::crp_sequential(z, eta)).epsilon(1e-12));
        total += std::exp(lp);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(oracle::all_partitions(3).size() == 5);
  CHECK(oracle::all_partitions(6).size() == 203);
}

TEST_CASE("CRP Gibbs weights") {
  const Matrix x = Matrix::Zero(4, 1);
  const GWPrior p = scalar_prior();
  Assignments a(x, {5, 5, 5, 5}, p);
  a.detach(3, Vector::Zero(1), p);
  GibbsWeights w = crp_gibbs_weights(a, 0.7);
  REQUIRE(w.counts.size() == 1);
  CHECK(w.counts[0] == 3.0);
  CHECK(w.new_cluster == 0.7);
  Assignments b(x, {9, 2, 9, 2}, p);
  Assignments c(x, {0, 1, 0, 1}, p);
  b.detach(0, Vector::Zero(1), p);
  c.detach(0, Vector::Zero(1), p);
  auto wb = crp_gibbs_weights(b, 1.0).counts;
  auto wc = crp_gibbs_weights(c, 1.0).counts;
  std::sort(wb.begin(), wb.end());
  std::sort(wc.begin(), wc.end());
  CHECK(wb == wc);
}

TEST_CASE("Gibbs conditional matches enumeration of joint ratios") {
  Engine rng = make_stream(8, "mix");
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 3 + inst % 4;
    const int q = 1 + inst % 2;
    const GWPrior p = random_prior(rng, q);
    const Matrix x = oracle::random_matrix(rng, n, q, 1.5);
    std::vector<int> z = oracle::canonical(random_labels(rng, n, 3));
    const int target = inst % n;
    Assignments a(x, z, p);
    a.detach(target, x.row(target).transpose(), p);
    const GibbsConditional cond = gibbs_conditional(x.row(target).transpose(), a, p);

    // Brute force: joint of every full assignment that agrees with the rest.
    std::vector<double> lj;
    for (std::size_t k = 0; k < cond.slots.size(); ++k) {
      std::vector<int> zz = z;
      if (cond.slots[k] < 0) {
        zz[target] = 1000;
      } else {
        for (int m = 0; m < n; ++m) {
          if (m != target && a.slot_of(m) == cond.slots[k]) zz[target] = z[m];
        }
      }
      lj.push_back(log_joint_labels(x, zz, p));
    }
    const double lse = log_sum_exp(lj);
    for (std::size_t k = 0; k < lj.size(); ++k) {
      CHECK(cond.probabilities[k] == doctest::Approx(std::exp(lj[k] - lse)).epsilon(1e-8));
    }
  }
}

TEST_CASE("Gibbs weights stay finite for extreme points") {
  const GWPrior p = GWPrior::defaults(2);
  Matrix x = Matrix::Zero(3, 2);
  x(2, 0) = 1e3;
  x(2, 1) = -1e3;
  Assignments a(x, {0, 0, 1}, p);
  a.detach(2, x.row(2).transpose(), p);
  const auto cond = gibbs_conditional(x.row(2).transpose(), a, p);
  double s = 0.0;
  for (double v : cond.probabilities) {
    CHECK(std::isfinite(v));
    s += v;
  }
  CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("assignment bookkeeping") {
  const GWPrior p = GWPrior::defaults(1);
  Matrix x(5, 1);
  x << 0.0, 1.0, 2.0, 3.0, 4.0;
  Assignments a(x, {7, 3, 7, 3, 9}, p);
  CHECK(a.num_clusters() == 3);
  CHECK(a.canonical_labels() == std::vector<int>{0, 1, 0, 1, 2});
  auto counts = a.counts();
  CHECK(std::accumulate(counts.begin(), counts.end(), 0) == 5);
  const int freed = a.slot_of(4);
  a.detach(4, x.row(4).transpose(), p);
  CHECK(a.num_clusters() == 2);
  CHECK(a.slot_of(4) == -1);
  CHECK(a.attach_new(4, x.row(4).transpose(), p) == freed);
  a.detach(1, x.row(1).transpose(), p);
  a.attach(1, a.slot_of(0), x.row(1).transpose());
  CHECK(a.canonical_labels() == std::vector<int>{0, 0, 0, 1, 2});
  CHECK(crp_log_prob(a, 1.0) == doctest::Approx(oracle::crp_sequential(a.canonical_labels(), 1.0)));
  CHECK(log_marginal_x_given_z(x, a, p) ==
        doctest::Approx(log_marginal_x_given_z(x, a.canonical_labels(), p)).epsilon(1e-12));
}
