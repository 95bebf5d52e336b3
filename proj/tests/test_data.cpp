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
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "doctest.h"
#include "iwmm/data.hpp"
#include "iwmm/evaluation.hpp"
#include "oracles.hpp"

using namespace iwmm;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path p = fs::temp_directory_path() / ("iwmm_test_data_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

// Maximum-likelihood mixture of two full-covariance Gaussians by EM, best of
// several random starts. Returns hard assignments.
std::vector<int> gmm2_em(const Matrix& y, std::uint64_t seed) {
  const Eigen::Index n = y.rows(), d = y.cols();
  Engine rng = make_stream(seed, "em");
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  double best = -INFINITY;
  std::vector<int> best_z;
  for (int start = 0; start < 10; ++start) {
    Matrix mu(2, d);
    mu.row(0) = y.row(pick(rng));
    mu.row(1) = y.row(pick(rng));
    const Matrix cov0 = (y.rowwise() - y.colwise().mean()).transpose() *
                        (y.rowwise() - y.colwise().mean()) / static_cast<double>(n);
    Matrix cov[2] = {cov0, cov0};
    double w[2] = {0.5, 0.5};
    Matrix resp(n, 2);
    double ll = 0.0;
    for (int iter = 0; iter < 300; ++iter) {
      ll = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double l[2];
        for (int k = 0; k < 2; ++k) {
          l[k] = std::log(w[k]) + oracle::mvn_logpdf(y.row(i).transpose(), mu.row(k).transpose(), cov[k]);
        }
        const double m = std::max(l[0], l[1]);
        const double lse = m + std::log(std::exp(l[0] - m) + std::exp(l[1] - m));
        for (int k = 0; k < 2; ++k) resp(i, k) = std::exp(l[k] - lse);
        ll += lse;
      }
      for (int k = 0; k < 2; ++k) {
        const double nk = resp.col(k).sum();
        w[k] = nk / static_cast<double>(n);
        mu.row(k) = (resp.col(k).asDiagonal() * y).colwise().sum() / nk;
        const Matrix c = y.rowwise() - mu.row(k);
        cov[k] = c.transpose() * resp.col(k).asDiagonal() * c / nk + 1e-6 * Matrix::Identity(d, d);
      }
    }
    if (ll > best) {
      best = ll;
      best_z.assign(static_cast<std::size_t>(n), 0);
      for (Eigen::Index i = 0; i < n; ++i) best_z[static_cast<std::size_t>(i)] = resp(i, 1) > resp(i, 0);
    }
  }
  return best_z;
}

}  // namespace

TEST_CASE("generators match the documented sizes") {
  struct Row {
    std::string name;
    int n, d, c;
  };
  for (const Row& r : {Row{"two-curve", 100, 2, 2}, Row{"three-semi", 300, 2, 3},
                       Row{"two-circle", 100, 2, 2}, Row{"pinwheel", 250, 2, 5}}) {
    CAPTURE(r.name);
    const Dataset d = generate(r.name, 3);
    CHECK(d.size() == r.n);
    CHECK(d.dim() == r.d);
    REQUIRE(d.labels);
    CHECK(d.declared_clusters == r.c);
    std::map<int, int> counts;
    for (int l : *d.labels) ++counts[l];
    CHECK(static_cast<int>(counts.size()) == r.c);
    for (auto& [l, k] : counts) CHECK(k == r.n / r.c);
    CHECK(d.y.allFinite());
  }
  CHECK_THROWS_AS(generate("three-curve", 1), ValidationError);
}

TEST_CASE("generators are deterministic per seed") {
  for (const auto& name : generator_names()) {
    const Dataset a = generate(name, 11);
    const Dataset b = generate(name, 11);
    const Dataset c = generate(name, 12);
    CHECK(std::memcmp(a.y.data(), b.y.data(), sizeof(double) * a.y.size()) == 0);
    CHECK(fingerprint(a) == fingerprint(b));
    CHECK(fingerprint(a) != fingerprint(c));
  }
}

TEST_CASE("two-circle inner radius is at most half the outer") {
  const Dataset d = generate("two-circle", 1);
  double r[2] = {0, 0};
  int n[2] = {0, 0};
  for (int i = 0; i < d.size(); ++i) {
    const int l = (*d.labels)[i];
    r[l] += d.y.row(i).norm();
    ++n[l];
  }
  const double a = r[0] / n[0], b = r[1] / n[1];
  CHECK(std::max(a, b) / std::min(a, b) >= 2.0);
}

TEST_CASE("centering is exact") {
  const Dataset d = generate("pinwheel", 2);
  CHECK(d.centered().colwise().mean().norm() < 1e-12);
  const Matrix back = d.uncenter(d.centered());
  // Adding back a subtracted double can differ from the original in the last bit.
  for (int i = 0; i < d.y.size(); ++i) {
    const double a = back.data()[i], b = d.y.data()[i];
    CHECK(std::abs(a - b) <= 2 * std::numeric_limits<double>::epsilon() * std::max(std::abs(b), 1.0));
  }
}

TEST_CASE("csv round-trip is lossless") {
  const fs::path dir = temp_dir();
  const Dataset d = generate("two-curve", 5);
  write_csv(dir / "a.csv", d);
  const Dataset r = load_csv(dir / "a.csv", std::string("label"));
  CHECK(r.y == d.y);
  CHECK(*r.labels == *d.labels);
  CHECK(r.columns.size() == 2);
  write_csv(dir / "b.csv", r);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  std::string head = slurp(dir / "a.csv").substr(0, 12);
  CHECK(head.rfind("y0,y1,label", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("csv errors carry the line number") {
  const fs::path dir = temp_dir();
  write_text(dir / "empty.csv", "");
  CHECK_THROWS_WITH_AS(load_csv(dir / "empty.csv"), doctest::Contains("empty dataset"), DataError);
  write_text(dir / "header.csv", "a,b\n");
  CHECK_THROWS_WITH_AS(load_csv(dir / "header.csv"), doctest::Contains("empty dataset"), DataError);
  write_text(dir / "ragged.csv", "a,b\n1,2\n3\n");
  CHECK_THROWS_WITH_AS(load_csv(dir / "ragged.csv"), doctest::Contains(":3:"), DataError);
  write_text(dir / "text.csv", "a,b\n1,2\n3,4\nx,5\n");
  CHECK_THROWS_WITH_AS(load_csv(dir / "text.csv"), doctest::Contains(":4:"), DataError);
  write_text(dir / "ok.csv", "a,b,class\n1,2,0\n3,4,1\n5,6,1\n");
  const Dataset d = load_csv(dir / "ok.csv", std::string("class"));
  CHECK(d.size() == 3);
  CHECK(d.dim() == 2);
  CHECK(d.declared_clusters == 2);
  CHECK_THROWS_AS(load_csv(dir / "ok.csv", std::string("nope")), DataError);
  CHECK_THROWS_AS(load_csv(dir / "missing.csv"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("subset keeps labels and recenters") {
  const Dataset d = generate("two-curve", 1);
  const Dataset s = d.subset({0, 1, 2, 60}, ":part");
  CHECK(s.size() == 4);
  CHECK(s.name == d.name + ":part");
  CHECK((*s.labels)[3] == (*d.labels)[60]);
  CHECK(s.y.row(3) == d.y.row(60));
  CHECK(s.centered().colwise().mean().norm() < 1e-12);
}

TEST_CASE("two Gaussians cannot separate the two curves") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const Dataset d = gen_two_curve(seed);
    CHECK(rand_index(gmm2_em(d.y, seed), *d.labels) < 0.7);
  }
}
