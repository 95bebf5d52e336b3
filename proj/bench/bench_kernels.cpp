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
// Serial reference versus OpenMP kernels at sizes a sampler run sees.

#include <benchmark/benchmark.h>

#include "iwmm/gp.hpp"
#include "iwmm/kernels.hpp"
#include "iwmm/random.hpp"

namespace {

using iwmm::Exec;
using iwmm::Matrix;

Matrix random_points(long n, long q, std::uint64_t seed) {
  iwmm::Engine rng = iwmm::make_stream(seed, "bench");
  Matrix x(n, q);
  for (long i = 0; i < x.size(); ++i) x.data()[i] = iwmm::standard_normal(rng);
  return x;
}

Exec exec_of(const benchmark::State& st) { return st.range(1) ? Exec::parallel : Exec::serial; }

void BM_RbfGram(benchmark::State& st) {
  const Matrix x = random_points(st.range(0), 2, 1);
  Matrix rbf, d2;
  for (auto _ : st) {
    iwmm::kernels::rbf_gram(x, 1.0, 0.8, rbf, &d2, exec_of(st));
    benchmark::DoNotOptimize(rbf.data());
  }
}

void BM_RbfGradX(benchmark::State& st) {
  const Matrix x = random_points(st.range(0), 2, 2);
  Matrix rbf;
  iwmm::kernels::rbf_gram(x, 1.0, 0.8, rbf, nullptr, Exec::serial);
  const Matrix w = rbf + rbf.transpose();
  for (auto _ : st) {
    Matrix g = iwmm::kernels::rbf_grad_x(w, rbf, x, 0.8, exec_of(st));
    benchmark::DoNotOptimize(g.data());
  }
}

void BM_MixtureDensity(benchmark::State& st) {
  const Matrix q = random_points(st.range(0), 2, 3);
  const Matrix means = random_points(2000, 2, 4);
  const iwmm::Vector var = iwmm::Vector::Constant(2000, 0.05);
  for (auto _ : st) {
    iwmm::Vector v = iwmm::kernels::isotropic_mixture_log_density(q, means, var, exec_of(st));
    benchmark::DoNotOptimize(v.data());
  }
}

void BM_KdeLoo(benchmark::State& st) {
  const Matrix y = random_points(st.range(0), 2, 5);
  for (auto _ : st) {
    iwmm::Vector v = iwmm::kernels::kde_loo_log_density(y, 0.3, exec_of(st));
    benchmark::DoNotOptimize(v.data());
  }
}

void BM_GpEvaluate(benchmark::State& st) {
  const Matrix x = random_points(st.range(0), 2, 6);
  const Matrix y = random_points(st.range(0), 2, 7);
  const iwmm::KernelParams p;
  for (auto _ : st) {
    auto ev = iwmm::gp_evaluate(y, x, p, {.grad_x = true, .grad_theta = true}, exec_of(st));
    benchmark::DoNotOptimize(ev.log_marginal);
  }
}

}  // namespace

BENCHMARK(BM_RbfGram)->ArgsProduct({{100, 300, 1000}, {0, 1}});
BENCHMARK(BM_RbfGradX)->ArgsProduct({{100, 300, 1000}, {0, 1}});
BENCHMARK(BM_MixtureDensity)->ArgsProduct({{1000, 10000}, {0, 1}});
BENCHMARK(BM_KdeLoo)->ArgsProduct({{100, 1000}, {0, 1}});
BENCHMARK(BM_GpEvaluate)->ArgsProduct({{100, 300}, {0, 1}});

BENCHMARK_MAIN();
