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

// Posterior predictive density in observed space. For every posterior
// sample, latent points are drawn from the collapsed mixture (assignment,
// Wishart precision, mean, point) and pushed through the GP predictive,
// each contributing an isotropic Gaussian in observed space.

#include <cstdint>
#include <filesystem>

#include "iwmm/common.hpp"
#include "iwmm/mcmc.hpp"

namespace iwmm {

struct PredictiveConfig {
  int draws = 10;  ///< latent draws per posterior sample
  std::uint64_t seed = 1;
  Exec exec = Exec::parallel;
};

struct LatentDraw {
  int z_star = -1;  ///< slot of the chosen cluster, -1 for a new one
  Matrix r_star;    ///< precision
  Vector mu_star;
  Vector x_star;
};

/// One draw of a new latent point from the collapsed mixture.
LatentDraw draw_latent_star(const Assignments& a, const GWPrior& prior, Engine& rng);

/// Equal-weight mixture of isotropic Gaussians in the centered observed frame.
struct PredictiveMixture {
  Matrix means;      ///< K x D
  Vector variances;  ///< K
  Vector center;     ///< add to means for the observed frame
};

/// Latent draws for every archived sample. Draws for a sample depend only on
/// (config.seed, sample iteration), so the result does not depend on the
/// order of samples in the archive.
PredictiveMixture build_predictive(const SampleArchive& archive, const PredictiveConfig& config);

/// Gaussian components contributed by one sample.
PredictiveMixture sample_predictive(const SampleRecord& sample, const SampleArchive& archive,
                                    int draws, Engine& rng);

/// Log density at each row of `points` (observed coordinates).
Vector log_density(const Matrix& points, const PredictiveMixture& mix, Exec exec = Exec::parallel);

struct DensityEstimate {
  double density = 0.0;
  double std_error = 0.0;  ///< Monte Carlo standard error over mixture components
};
DensityEstimate density_estimate(const Vector& y_star, const PredictiveMixture& mix);

/// Exact collapsed predictive for identity-mapping archives, averaged over samples.
Vector igmm_log_density(const Matrix& points, const SampleArchive& archive);

/// Posterior predictive density at y_star (observed coordinates). Uses the
/// latent-draw estimator for warped archives and the exact predictive for
/// identity-mapping ones.
double density_at(const Vector& y_star, const SampleArchive& archive, const PredictiveConfig& config);
/// Same for many points, sharing latent draws.
Vector log_density_at(const Matrix& points, const SampleArchive& archive,
                      const PredictiveConfig& config);

struct GridBounds {
  double x_min = -1.0, x_max = 1.0, y_min = -1.0, y_max = 1.0;
};

struct DensityGrid {
  GridBounds bounds;
  int nx = 0, ny = 0;
  Matrix values;  ///< ny x nx, row j at y_min + (j + 0.5) dy
  double max_relative_std_error = 0.0;

  double cell_area() const;
  double mass() const { return values.sum() * cell_area(); }
  double x_at(int i) const;
  double y_at(int j) const;
};

/// Density on cell centers of a 2-D grid. Throws UnsupportedDimensionError for D != 2.
DensityGrid density_grid(const SampleArchive& archive, const GridBounds& bounds, int nx, int ny,
                         const PredictiveConfig& config);

/// Header lines "# bounds=..." and "# resolution=...", then x,y,density rows.
void write_grid_csv(const std::filesystem::path& path, const DensityGrid& grid);

}  // namespace iwmm
