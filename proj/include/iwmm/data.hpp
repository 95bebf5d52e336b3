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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iwmm/common.hpp"

namespace iwmm {

/// Observed data with optional ground-truth labels and a centering record.
struct Dataset {
  std::string name;
  Matrix y;                               ///< N x D, as observed
  Vector means;                           ///< per-dimension means subtracted for inference
  std::optional<std::vector<int>> labels; ///< true cluster ids
  int declared_clusters = 0;              ///< number of distinct labels, 0 when unlabeled
  std::vector<std::string> columns;       ///< feature names
  std::map<std::string, std::string> metadata;

  Eigen::Index size() const { return y.rows(); }
  Eigen::Index dim() const { return y.cols(); }

  /// y with the recorded means removed.
  Matrix centered() const;
  /// Inverse of centering for values produced in the centered frame.
  Matrix uncenter(const Matrix& centered_values) const;

  /// Rows selected by `index`, keeping labels; centering is recomputed.
  Dataset subset(const std::vector<int>& index, const std::string& suffix) const;
};

/// Builds a dataset and its centering record.
Dataset make_dataset(std::string name, Matrix y, std::optional<std::vector<int>> labels = {});

/// FNV-1a hash over the serialized observed matrix and labels.
std::uint64_t fingerprint(const Dataset& d);

// Synthetic generators. All are deterministic per seed; the shape constants
// are recorded in Dataset::metadata.
Dataset gen_two_curve(std::uint64_t seed);   ///< N=100, D=2, C=2
Dataset gen_three_semi(std::uint64_t seed);  ///< N=300, D=2, C=3
Dataset gen_two_circle(std::uint64_t seed);  ///< N=100, D=2, C=2
Dataset gen_pinwheel(std::uint64_t seed);    ///< N=250, D=2, C=5

/// Generator by CLI name (two-curve, three-semi, two-circle, pinwheel);
/// throws ValidationError for unknown names.
Dataset generate(const std::string& name, std::uint64_t seed);
const std::vector<std::string>& generator_names();

/// Reads a comma-separated file with a header row. When `label_column` names
/// a column it is parsed as integer labels and removed from the features.
/// Throws DataError with the line number for ragged rows or bad cells.
Dataset load_csv(const std::filesystem::path& path,
                 const std::optional<std::string>& label_column = std::nullopt);

/// Writes y (and labels as a final integer column "label") at 17 significant digits.
void write_csv(const std::filesystem::path& path, const Dataset& d);

/// Formats a double so that it parses back to the same value.
std::string format_double(double v);

}  // namespace iwmm
