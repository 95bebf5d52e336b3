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
#include "iwmm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>

#include "iwmm/log.hpp"
#include "iwmm/random.hpp"

namespace iwmm {

double rand_index(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) {
    throw ValidationError({"rand_index: partitions have different lengths"});
  }
  if (pred.size() < 2) throw ValidationError({"rand_index: undefined for fewer than two points"});
  const std::size_t n = pred.size();
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      agree += (pred[i] == pred[j]) == (truth[i] == truth[j]);
    }
  }
  return static_cast<double>(agree) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

std::vector<int> cluster_summary(const SampleArchive& archive) {
  if (archive.samples.empty()) throw ValidationError({"archive: contains no samples"});
  const auto best = std::max_element(
      archive.samples.begin(), archive.samples.end(),
      [](const SampleRecord& a, const SampleRecord& b) { return a.log_joint < b.log_joint; });
  return best->z;
}

// ---------------------------------------------------------------------------
// KDE

double kde_loo_objective(const Matrix& train, double h, Exec exec) {
  return kernels::kde_loo_log_density(train, h, exec).sum();
}

Vector kde_log_density(const Matrix& test, const Matrix& train, double bandwidth, Exec exec) {
  if (test.cols() != train.cols()) throw InputShapeError("kde: dimension mismatch");
  return kernels::kde_log_density(test, train, bandwidth, exec);
}

double kde_fit(const Matrix& train, Exec exec) {
  if (train.rows() < 2) throw ValidationError({"kde: need at least two training points"});
  std::vector<double> dists;
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < train.rows(); ++j) {
      dists.push_back((train.row(i) - train.row(j)).norm());
    }
  }
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  double scale = dists[dists.size() / 2];
  if (!(scale > 0.0)) {
    const double max_d = *std::max_element(dists.begin(), dists.end());
    if (!(max_d > 0.0)) throw DataError("kde: bandwidth search failed, training points are identical");
    scale = max_d;
  }

  const double lo = std::log(1e-3 * scale);
  const double hi = std::log(1e3 * scale);
  auto f = [&](double log_h) { return kde_loo_objective(train, std::exp(log_h), exec); };

  // Coarse scan locates the basin; golden section refines inside it.
  constexpr int kScan = 61;
  std::vector<double> grid(kScan), vals(kScan);
  for (int i = 0; i < kScan; ++i) {
    grid[i] = lo + (hi - lo) * i / (kScan - 1);
    vals[i] = f(grid[i]);
  }
  const int best = static_cast<int>(std::max_element(vals.begin(), vals.end()) - vals.begin());
  double a = grid[std::max(best - 1, 0)];
  double b = grid[std::min(best + 1, kScan - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  // Relative tolerance 1e-4 on h is an absolute 1e-4 on log h.
  while (b - a > 1e-4) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return std::exp(0.5 * (a + b));
}

// ---------------------------------------------------------------------------
// Folds and reports

FoldPlan make_folds(int n, int folds, std::uint64_t seed) {
  if (folds < 1) throw ValidationError({"benchmark.folds: must be >= 1"});
  if (n < folds) throw ValidationError({"benchmark.folds: more folds than points"});
  FoldPlan plan;
  plan.folds = folds;
  plan.seed = seed;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Engine rng = make_stream(seed, "folds");
  std::shuffle(order.begin(), order.end(), rng);
  plan.fold_of.assign(n, 0);
  for (int i = 0; i < n; ++i) plan.fold_of[order[i]] = i % folds;
  return plan;
}

std::vector<int> FoldPlan::train(int k) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(fold_of.size()); ++i) {
    if (folds == 1 || fold_of[i] != k) out.push_back(i);
  }
  return out;
}

std::vector<int> FoldPlan::test(int k) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(fold_of.size()); ++i) {
    if (fold_of[i] == k) out.push_back(i);
  }
  return out;
}

void MetricReport::finalize() {
  const auto n = static_cast<double>(per_fold.size());
  if (per_fold.empty()) return;
  mean = std::accumulate(per_fold.begin(), per_fold.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : per_fold) ss += (v - mean) * (v - mean);
  std_error = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

const std::vector<std::string>& benchmark_methods() {
  static const std::vector<std::string> names{"kde", "igmm", "iwmm_q2", "iwmm_qd"};
  return names;
}

namespace {

struct JobResult {
  double rand = std::nan("");
  double loglik = std::nan("");
};

JobResult run_job(const Dataset& data, const std::string& method, const FoldPlan& plan, int fold,
                  const BenchmarkConfig& config, std::uint64_t job_seed) {
  const Dataset train = data.subset(plan.train(fold), ":train" + std::to_string(fold));
  const Dataset test = data.subset(plan.test(fold), ":test" + std::to_string(fold));
  JobResult r;
  if (method == "kde") {
    const double h = kde_fit(train.y, Exec::serial);
    if (config.loglik) r.loglik = kde_log_density(test.y, train.y, h, Exec::serial).mean();
    return r;
  }
  SamplerConfig sc = config.sampler;
  sc.seed = job_seed;
  if (method == "igmm") {
    sc.mode = SamplerMode::igmm;
    sc.latent_dim = 0;
  } else if (method == "iwmm_q2") {
    sc.mode = SamplerMode::iwmm;
    sc.latent_dim = std::min<int>(2, static_cast<int>(data.dim()));
  } else if (method == "iwmm_qd") {
    sc.mode = SamplerMode::iwmm;
    sc.latent_dim = 0;
  } else {
    throw ValidationError({"benchmark: unknown method '" + method + "'"});
  }
  const SampleArchive archive = run_chain(train, sc);
  if (config.rand && train.labels) r.rand = rand_index(cluster_summary(archive), *train.labels);
  if (config.loglik) {
    PredictiveConfig pc = config.predictive;
    pc.seed = job_seed;
    pc.exec = Exec::serial;
    r.loglik = log_density_at(test.y, archive, pc).mean();
  }
  return r;
}

}  // namespace

std::vector<MetricReport> run_benchmark(const Dataset& data, const std::vector<std::string>& methods,
                                        const BenchmarkConfig& config) {
  if (methods.empty()) throw ValidationError({"benchmark: method list is empty"});
  for (const auto& m : methods) {
    if (std::find(benchmark_methods().begin(), benchmark_methods().end(), m) ==
        benchmark_methods().end()) {
      throw ValidationError({"benchmark: unknown method '" + m + "'"});
    }
  }
  if (config.rand && !data.labels) {
    throw ValidationError({"benchmark: Rand index requested but dataset has no labels"});
  }
  const FoldPlan plan = make_folds(static_cast<int>(data.size()), config.folds, config.fold_seed);

  const int n_jobs = static_cast<int>(methods.size()) * config.folds;
  std::vector<JobResult> results(n_jobs);
  std::vector<std::exception_ptr> errors(n_jobs);
  auto job = [&](int j) {
    const int mi = j / config.folds;
    const int fold = j % config.folds;
    const std::uint64_t seed = config.sampler.seed * 1000003ULL + static_cast<std::uint64_t>(fold);
    try {
      results[j] = run_job(data, methods[mi], plan, fold, config, seed);
    } catch (const Error& e) {
      errors[j] = std::make_exception_ptr(
          Error("fold " + std::to_string(fold) + " (" + methods[mi] + "): " + e.what()));
    } catch (...) {
      errors[j] = std::current_exception();
    }
    log::info("benchmark " + data.name + " " + methods[mi] + " fold " + std::to_string(fold) +
              " done");
  };
  if (config.parallel_jobs) {
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < n_jobs; ++j) job(j);
  } else {
    for (int j = 0; j < n_jobs; ++j) job(j);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<MetricReport> reports;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (const char* metric : {"rand", "test_loglik"}) {
      const bool is_rand = std::string(metric) == "rand";
      if (is_rand && (!config.rand || methods[mi] == "kde")) continue;
      if (!is_rand && !config.loglik) continue;
      MetricReport rep{data.name, methods[mi], metric, {}, 0.0, 0.0};
      for (int fold = 0; fold < config.folds; ++fold) {
        const JobResult& r = results[mi * config.folds + fold];
        rep.per_fold.push_back(is_rand ? r.rand : r.loglik);
      }
      rep.finalize();
      reports.push_back(std::move(rep));
    }
  }
  return reports;
}

void write_reports_csv(const std::filesystem::path& path, const std::vector<MetricReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "dataset,method,fold,metric,value\n";
  for (const auto& r : reports) {
    for (std::size_t k = 0; k < r.per_fold.size(); ++k) {
      out << r.dataset << ',' << r.method << ',' << k << ',' << r.metric << ','
          << format_double(r.per_fold[k]) << '\n';
    }
    out << r.dataset << ',' << r.method << ",mean," << r.metric << ',' << format_double(r.mean)
        << '\n';
    out << r.dataset << ',' << r.method << ",stderr," << r.metric << ','
        << format_double(r.std_error) << '\n';
  }
}

}  // namespace iwmm
