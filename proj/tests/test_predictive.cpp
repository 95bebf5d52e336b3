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
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "iwmm/data.hpp"
#include "iwmm/predictive.hpp"
#include "oracles.hpp"

using namespace iwmm;

namespace {

/// Archive holding a few prior draws, standing in for posterior samples.
SampleArchive prior_archive(int n, int q, int d, int samples, std::uint64_t seed) {
  const GWPrior p = GWPrior::defaults(q);
  const KernelParams k{0.0, 0.0, std::log(50.0)};
  const PriorSample base = sample_prior(n, q, d, p, k, seed);
  SampleArchive a;
  a.prior = p;
  a.y = base.y.rowwise() - base.y.colwise().mean();
  a.means = Vector::Constant(d, 0.25);
  Engine rng = make_stream(seed, "jitter");
  for (int s = 0; s < samples; ++s) {
    SampleRecord r;
    r.iter = 10 * (s + 1);
    r.x = base.x + 0.05 * oracle::random_matrix(rng, n, q);
    r.z = oracle::canonical(base.z);
    r.kernel = k;
    a.samples.push_back(r);
  }
  return a;
}

/// Draw from a multivariate Student-t by the normal / chi-square mixture.
Vector student_t_draw(Engine& rng, const Vector& m, const Matrix& scale, double df) {
  std::chi_squared_distribution<double> chi(df);
  const Matrix l = Eigen::LLT<Matrix>(scale).matrixL();
  return m + l * standard_normal_vector(rng, m.size()) / std::sqrt(chi(rng) / df);
}

}  // namespace

TEST_CASE("with no points every latent draw opens a new component") {
  const GWPrior p = GWPrior::defaults(2);
  const Assignments a(Matrix(0, 2), {}, p);
  Engine rng = make_stream(1, "star");
  for (int i = 0; i < 100; ++i) CHECK(draw_latent_star(a, p, rng).z_star == -1);
}

TEST_CASE("latent assignment frequencies follow the CRP predictive") {
  GWPrior p = GWPrior::defaults(2);
  p.eta = 1.5;
  Engine data_rng = make_stream(2, "star");
  const Matrix x = oracle::random_matrix(data_rng, 10, 2);
  const Assignments a(x, {0, 0, 0, 0, 0, 1, 1, 1, 2, 2}, p);
  Engine rng = make_stream(3, "star");
  std::map<int, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[draw_latent_star(a, p, rng).z_star];
  double chi2 = 0.0;
  const double total = 10 + p.eta;
  for (int s : a.active_slots()) {
    const double e = n * a.stats(s).count() / total;
    chi2 += std::pow(counts[s] - e, 2) / e;
  }
  const double e_new = n * p.eta / total;
  chi2 += std::pow(counts[-1] - e_new, 2) / e_new;
  CHECK(oracle::chi2_sf(chi2, 3.0) > 0.001);
}

TEST_CASE("latent draws for a fixed cluster follow its Student-t predictive") {
  GWPrior p = GWPrior::defaults(2);
  p.eta = 0.5;
  Engine data_rng = make_stream(4, "star");
  const Matrix x = oracle::random_matrix(data_rng, 6, 2) * 0.7;
  const Assignments a(x, {0, 0, 0, 0, 0, 0}, p);
  const int slot = a.active_slots().front();
  const ComponentStats& st = a.stats(slot);
  const double df = st.nu_c() - 2 + 1;
  const Matrix scale = st.scatter() * (st.r_c() + 1) / (st.r_c() * df);
  const Matrix prior_scale = p.s * (p.r + 1) / (p.r * (p.nu - 1));

  Engine rng = make_stream(5, "star");
  Engine ref_rng = make_stream(6, "star");
  const Vector dir = (Vector(2) << 0.6, 0.8).finished();
  std::vector<double> got, got_new, ref, ref_new;
  while (got.size() < 100000 || got_new.size() < 20000) {
    const LatentDraw ld = draw_latent_star(a, p, rng);
    CHECK(Eigen::LLT<Matrix>(ld.r_star).info() == Eigen::Success);
    if (ld.z_star == slot) got.push_back(dir.dot(ld.x_star));
    else got_new.push_back(dir.dot(ld.x_star));
  }
  for (std::size_t i = 0; i < got.size(); ++i) ref.push_back(dir.dot(student_t_draw(ref_rng, st.u_c(), scale, df)));
  for (std::size_t i = 0; i < got_new.size(); ++i) {
    ref_new.push_back(dir.dot(student_t_draw(ref_rng, p.u, prior_scale, p.nu - 1)));
  }
  // Two-sample KS critical value at alpha = 0.001.
  auto crit = [](double n, double m) { return 1.95 * std::sqrt((n + m) / (n * m)); };
  CHECK(oracle::ks_statistic(got, ref) < crit(got.size(), ref.size()));
  CHECK(oracle::ks_statistic(got_new, ref_new) < crit(got_new.size(), ref_new.size()));
}

TEST_CASE("one sample and one draw give exactly one Gaussian") {
  SampleArchive a = prior_archive(15, 2, 2, 1, 7);
  PredictiveConfig cfg;
  cfg.draws = 1;
  cfg.seed = 3;
  const PredictiveMixture mix = build_predictive(a, cfg);
  REQUIRE(mix.means.rows() == 1);

  // Redraw the latent point with the same stream and push it through gp_predict.
  Engine rng = make_stream(cfg.seed, "predictive:" + std::to_string(a.samples[0].iter));
  const Assignments asg(a.samples[0].x, a.samples[0].z, a.prior);
  const LatentDraw ld = draw_latent_star(asg, a.prior, rng);
  const GpPrediction pr = gp_predict(ld.x_star, a.samples[0].x, a.y, a.samples[0].kernel);
  CHECK((pr.mean - mix.means.row(0).transpose()).norm() < 1e-12);
  CHECK(pr.variance == doctest::Approx(mix.variances(0)).epsilon(1e-12));

  const Vector ystar = (Vector(2) << 0.1, -0.3).finished();
  const double expect =
      oracle::mvn_logpdf(ystar - a.means, pr.mean, pr.variance * Matrix::Identity(2, 2));
  CHECK(std::log(density_at(ystar, a, cfg)) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("density is invariant to archive order") {
  SampleArchive a = prior_archive(12, 2, 2, 6, 8);
  PredictiveConfig cfg;
  const Matrix pts = (Matrix(3, 2) << 0.0, 0.0, 0.5, -0.2, 2.0, 1.0).finished();
  const Vector before = log_density_at(pts, a, cfg);
  std::reverse(a.samples.begin(), a.samples.end());
  std::swap(a.samples[1], a.samples[4]);
  const Vector after = log_density_at(pts, a, cfg);
  for (int i = 0; i < 3; ++i) CHECK(after(i) == doctest::Approx(before(i)).epsilon(1e-12));
}

TEST_CASE("serial and parallel predictive agree") {
  const SampleArchive a = prior_archive(12, 2, 2, 5, 9);
  PredictiveConfig ser, par;
  ser.exec = Exec::serial;
  par.exec = Exec::parallel;
  const PredictiveMixture m1 = build_predictive(a, ser);
  const PredictiveMixture m2 = build_predictive(a, par);
  CHECK(m1.means == m2.means);
  CHECK(m1.variances == m2.variances);
}

TEST_CASE("density near the data exceeds density far away") {
  const SampleArchive a = prior_archive(25, 2, 2, 4, 10);
  PredictiveConfig cfg;
  Vector near = a.means;
  const double sd = std::sqrt((a.y.array().square().sum()) / a.y.size());
  Vector far = a.means + Vector::Constant(2, 10.0 * sd);
  CHECK(density_at(near, a, cfg) > 1e3 * density_at(far, a, cfg));
  CHECK(density_at(far, a, cfg) > 0.0);
}

TEST_CASE("Monte Carlo variance halves when draws double") {
  const SampleArchive a = prior_archive(10, 2, 2, 1, 11);
  const Vector y = a.means + a.y.row(0).transpose();
  std::vector<double> d1, d2;
  for (int rep = 0; rep < 200; ++rep) {
    PredictiveConfig c1, c2;
    c1.draws = 10;
    c2.draws = 20;
    c1.seed = c2.seed = 1000 + static_cast<std::uint64_t>(rep);
    c2.seed += 500;
    d1.push_back(density_at(y, a, c1));
    d2.push_back(density_at(y, a, c2));
  }
  auto var = [](const std::vector<double>& v) {
    double m = 0.0, s = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1);
  };
  const double ratio = var(d1) / var(d2);
  // F(199, 199) puts 99.9% of the ratio of two equal variances in [0.64, 1.55].
  CHECK(ratio > 2.0 * 0.64);
  CHECK(ratio < 2.0 * 1.55);
}

TEST_CASE("density grids") {
  SampleArchive a = prior_archive(20, 2, 2, 3, 12);
  PredictiveConfig cfg;
  const GridBounds b{-4, 4, -4, 4};
  const DensityGrid g = density_grid(a, b, 60, 50, cfg);
  CHECK(g.values.rows() == 50);
  CHECK(g.values.cols() == 60);
  CHECK(g.values.allFinite());
  CHECK(g.values.minCoeff() >= 0.0);
  CHECK(g.cell_area() == doctest::Approx(8.0 / 60 * 8.0 / 50));
  CHECK(g.x_at(0) == doctest::Approx(-4 + 4.0 / 60));
  const Matrix p = (Matrix(1, 2) << g.x_at(7), g.y_at(9)).finished();
  CHECK(g.values(9, 7) == doctest::Approx(std::exp(log_density_at(p, a, cfg)(0))).epsilon(1e-12));

  const std::filesystem::path out = std::filesystem::temp_directory_path() / "iwmm_grid_test.csv";
  write_grid_csv(out, g);
  std::ifstream in(out);
  std::string l1, l2, l3, l4;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  std::getline(in, l4);
  CHECK(l1 == "# bounds=-4,4,-4,4");
  CHECK(l2 == "# resolution=60,50");
  CHECK(l3.rfind("# mass=", 0) == 0);
  CHECK(l4 == "x,y,density");
  std::filesystem::remove(out);

  SampleArchive a3 = prior_archive(10, 2, 3, 1, 13);
  CHECK_THROWS_AS(density_grid(a3, b, 10, 10, cfg), UnsupportedDimensionError);
  CHECK_THROWS_AS(density_grid(a, b, 0, 10, cfg), ValidationError);
}

TEST_CASE("identity-mode archives use the exact collapsed predictive") {
  Engine rng = make_stream(14, "igmm");
  const Matrix y = oracle::random_matrix(rng, 8, 2);
  SampleArchive a;
  a.mode = SamplerMode::igmm;
  a.prior = GWPrior::defaults(2);
  a.y = y;
  a.means = Vector::Zero(2);
  const std::vector<int> z{0, 0, 0, 1, 1, 1, 1, 2};
  a.samples.push_back({1, y, z, KernelParams{}, 0.0});
  const Vector q = (Vector(2) << 0.3, 0.1).finished();
  double expect = 0.0;
  const double total = 8 + a.prior.eta;
  for (int c = 0; c < 3; ++c) {
    std::vector<int> idx;
    for (int i = 0; i < 8; ++i) {
      if (z[i] == c) idx.push_back(i);
    }
    Matrix pts(static_cast<long>(idx.size()), 2);
    for (std::size_t k = 0; k < idx.size(); ++k) pts.row(static_cast<long>(k)) = y.row(idx[k]);
    expect += idx.size() / total *
              std::exp(oracle::gw_predictive_student_t(q, pts, a.prior.u, a.prior.r, a.prior.s, a.prior.nu));
  }
  expect += a.prior.eta / total *
            std::exp(oracle::gw_predictive_student_t(q, Matrix(0, 2), a.prior.u, a.prior.r, a.prior.s, a.prior.nu));
  CHECK(density_at(q, a, PredictiveConfig{}) == doctest::Approx(expect).epsilon(1e-10));
  CHECK_THROWS_AS(build_predictive(a, PredictiveConfig{}), ValidationError);
}
