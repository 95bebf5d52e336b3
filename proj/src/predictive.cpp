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
#include "iwmm/predictive.hpp"

#include <cmath>
#include <exception>
#include <fstream>

#include "iwmm/data.hpp"
#include "iwmm/kernels.hpp"

namespace iwmm {

LatentDraw draw_latent_star(const Assignments& a, const GWPrior& prior, Engine& rng) {
  const std::vector<int> slots = a.active_slots();
  std::vector<double> lw;
  for (int s : slots) lw.push_back(std::log(static_cast<double>(a.stats(s).count())));
  lw.push_back(std::log(prior.eta));
  const std::size_t k = sample_log_categorical(rng, lw);

  LatentDraw out;
  const ComponentStats empty(prior);
  const ComponentStats* st = &empty;
  if (k < slots.size()) {
    out.z_star = slots[k];
    st = &a.stats(slots[k]);
  }
  // Wishart scale S_c^{-1}.
  const Matrix& l = st->s_chol();
  const Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(l.rows(), l.cols()));
  const Matrix scale_chol = Eigen::LLT<Matrix>(linv.transpose() * linv).matrixL();
  out.r_star = sample_wishart(rng, scale_chol, st->nu_c());
  const Matrix r_chol = Eigen::LLT<Matrix>(out.r_star).matrixL();
  out.mu_star = sample_normal_from_precision(rng, st->u_c(), std::sqrt(st->r_c()) * r_chol);
  out.x_star = sample_normal_from_precision(rng, out.mu_star, r_chol);
  return out;
}

PredictiveMixture sample_predictive(const SampleRecord& sample, const SampleArchive& archive,
                                    int draws, Engine& rng) {
  const Assignments a(sample.x, sample.z, archive.prior);
  Matrix xs(draws, sample.x.cols());
  for (int m = 0; m < draws; ++m) {
    xs.row(m) = draw_latent_star(a, archive.prior, rng).x_star.transpose();
  }
  const GpPosterior gp(sample.x, archive.y, sample.kernel, Exec::serial);
  PredictiveMixture out;
  gp.predict_batch(xs, out.means, out.variances);
  out.center = archive.means;
  return out;
}

PredictiveMixture build_predictive(const SampleArchive& archive, const PredictiveConfig& config) {
  if (archive.samples.empty()) throw ValidationError({"archive: contains no samples"});
  if (archive.mode != SamplerMode::iwmm) {
    throw ValidationError({"archive: latent-draw predictive requires a warped (iwmm) archive"});
  }
  if (config.draws < 1) throw ValidationError({"predictive.draws: must be >= 1"});
  const auto s_count = static_cast<long>(archive.samples.size());
  std::vector<PredictiveMixture> parts(archive.samples.size());
  std::exception_ptr failure;

  auto job = [&](long s) {
    const SampleRecord& rec = archive.samples[s];
    Engine rng = make_stream(config.seed, "predictive:" + std::to_string(rec.iter));
    parts[s] = sample_predictive(rec, archive, config.draws, rng);
  };
  if (config.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long s = 0; s < s_count; ++s) {
      try {
        job(s);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
  } else {
    for (long s = 0; s < s_count; ++s) job(s);
  }
  if (failure) std::rethrow_exception(failure);

  PredictiveMixture mix;
  const Eigen::Index total = s_count * config.draws;
  mix.means.resize(total, archive.data_dim());
  mix.variances.resize(total);
  for (long s = 0; s < s_count; ++s) {
    mix.means.middleRows(s * config.draws, config.draws) = parts[s].means;
    mix.variances.segment(s * config.draws, config.draws) = parts[s].variances;
  }
  mix.center = archive.means;
  return mix;
}

Vector log_density(const Matrix& points, const PredictiveMixture& mix, Exec exec) {
  if (points.cols() != mix.means.cols()) throw InputShapeError("log_density: dimension mismatch");
  const Matrix centered = points.rowwise() - mix.center.transpose();
  return kernels::isotropic_mixture_log_density(centered, mix.means, mix.variances, exec);
}

DensityEstimate density_estimate(const Vector& y_star, const PredictiveMixture& mix) {
  const Vector q = y_star - mix.center;
  const auto k = static_cast<double>(mix.means.rows());
  const auto d = static_cast<double>(mix.means.cols());
  Vector comp(mix.means.rows());
  for (Eigen::Index c = 0; c < mix.means.rows(); ++c) {
    const double v = mix.variances(c);
    comp(c) = std::exp(-0.5 * d * (kLog2Pi + std::log(v)) -
                       0.5 * (q - mix.means.row(c).transpose()).squaredNorm() / v);
  }
  DensityEstimate out;
  out.density = comp.mean();
  if (k > 1) {
    out.std_error = std::sqrt((comp.array() - out.density).square().sum() / (k - 1.0) / k);
  }
  return out;
}

Vector igmm_log_density(const Matrix& points, const SampleArchive& archive) {
  if (archive.samples.empty()) throw ValidationError({"archive: contains no samples"});
  if (points.cols() != archive.data_dim()) throw InputShapeError("igmm density: dimension mismatch");
  const Matrix centered = points.rowwise() - archive.means.transpose();
  const GWPrior& prior = archive.prior;
  const ComponentStats empty(prior);
  const auto n_samples = static_cast<double>(archive.samples.size());
  Vector out(points.rows());
  std::vector<double> terms;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vector y = centered.row(i).transpose();
    terms.clear();
    for (const auto& rec : archive.samples) {
      const Assignments a(rec.x, rec.z, prior);
      const double total = a.num_points() + prior.eta;
      for (int s : a.active_slots()) {
        terms.push_back(std::log(a.stats(s).count() / total) +
                        log_pred_in_component(y, a.stats(s), prior));
      }
      terms.push_back(std::log(prior.eta / total) + log_pred_in_component(y, empty, prior));
    }
    out(i) = log_sum_exp(terms) - std::log(n_samples);
  }
  return out;
}

Vector log_density_at(const Matrix& points, const SampleArchive& archive,
                      const PredictiveConfig& config) {
  if (archive.mode == SamplerMode::igmm) return igmm_log_density(points, archive);
  return log_density(points, build_predictive(archive, config), config.exec);
}

double density_at(const Vector& y_star, const SampleArchive& archive,
                  const PredictiveConfig& config) {
  return std::exp(log_density_at(y_star.transpose(), archive, config)(0));
}

double DensityGrid::cell_area() const {
  return (bounds.x_max - bounds.x_min) / nx * (bounds.y_max - bounds.y_min) / ny;
}

double DensityGrid::x_at(int i) const {
  return bounds.x_min + (i + 0.5) * (bounds.x_max - bounds.x_min) / nx;
}

double DensityGrid::y_at(int j) const {
  return bounds.y_min + (j + 0.5) * (bounds.y_max - bounds.y_min) / ny;
}

DensityGrid density_grid(const SampleArchive& archive, const GridBounds& bounds, int nx, int ny,
                         const PredictiveConfig& config) {
  if (archive.data_dim() != 2) {
    throw UnsupportedDimensionError("density grids need D = 2, archive has D = " +
                                    std::to_string(archive.data_dim()));
  }
  if (nx < 1 || ny < 1) throw ValidationError({"density.resolution: must be >= 1 in each axis"});
  if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) {
    throw ValidationError({"density.bounds: max must exceed min on each axis"});
  }
  DensityGrid grid{bounds, nx, ny, Matrix(ny, nx), 0.0};
  Matrix pts(static_cast<Eigen::Index>(nx) * ny, 2);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) pts.row(j * nx + i) << grid.x_at(i), grid.y_at(j);
  }
  Vector logd;
  if (archive.mode == SamplerMode::igmm) {
    logd = igmm_log_density(pts, archive);
  } else {
    const PredictiveMixture mix = build_predictive(archive, config);
    logd = log_density(pts, mix, config.exec);
    // Report the worst relative Monte Carlo error at the densest cell.
    Eigen::Index best = 0;
    logd.maxCoeff(&best);
    const DensityEstimate e = density_estimate(pts.row(best).transpose(), mix);
    grid.max_relative_std_error = e.density > 0 ? e.std_error / e.density : 0.0;
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) grid.values(j, i) = std::exp(logd(j * nx + i));
  }
  return grid;
}

void write_grid_csv(const std::filesystem::path& path, const DensityGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# bounds=" << format_double(grid.bounds.x_min) << ',' << format_double(grid.bounds.x_max)
      << ',' << format_double(grid.bounds.y_min) << ',' << format_double(grid.bounds.y_max) << '\n';
  out << "# resolution=" << grid.nx << ',' << grid.ny << '\n';
  out << "# mass=" << format_double(grid.mass()) << '\n';
  out << "x,y,density\n";
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      out << format_double(grid.x_at(i)) << ',' << format_double(grid.y_at(j)) << ','
          << format_double(grid.values(j, i)) << '\n';
    }
  }
}

}  // namespace iwmm
