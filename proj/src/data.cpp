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
#include "iwmm/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "iwmm/random.hpp"

namespace iwmm {

namespace {

constexpr double kPi = std::numbers::pi;

int count_distinct(const std::vector<int>& labels) {
  return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

std::vector<std::string> default_columns(Eigen::Index d) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < d; ++j) out.push_back("y" + std::to_string(j));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Matrix Dataset::centered() const { return y.rowwise() - means.transpose(); }

Matrix Dataset::uncenter(const Matrix& centered_values) const {
  return centered_values.rowwise() + means.transpose();
}

Dataset Dataset::subset(const std::vector<int>& index, const std::string& suffix) const {
  Matrix sub(static_cast<Eigen::Index>(index.size()), y.cols());
  std::optional<std::vector<int>> sub_labels;
  if (labels) sub_labels.emplace();
  for (std::size_t i = 0; i < index.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = y.row(index[i]);
    if (labels) sub_labels->push_back((*labels)[index[i]]);
  }
  Dataset out = make_dataset(name + suffix, std::move(sub), std::move(sub_labels));
  out.columns = columns;
  out.metadata = metadata;
  return out;
}

Dataset make_dataset(std::string name, Matrix y, std::optional<std::vector<int>> labels) {
  if (labels && static_cast<Eigen::Index>(labels->size()) != y.rows()) {
    throw DataError("dataset " + name + ": label count differs from row count");
  }
  Dataset d;
  d.name = std::move(name);
  d.means = y.rows() > 0 ? Vector(y.colwise().mean().transpose()) : Vector::Zero(y.cols());
  d.y = std::move(y);
  d.declared_clusters = labels ? count_distinct(*labels) : 0;
  d.labels = std::move(labels);
  d.columns = default_columns(d.y.cols());
  return d;
}

std::uint64_t fingerprint(const Dataset& d) {
  std::string bytes = std::to_string(d.y.rows()) + "x" + std::to_string(d.y.cols()) + ";";
  for (Eigen::Index i = 0; i < d.y.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.y.cols(); ++j) bytes += format_double(d.y(i, j)) + ",";
    if (d.labels) bytes += std::to_string((*d.labels)[i]);
    bytes += '\n';
  }
  return fnv1a(bytes);
}

// ---------------------------------------------------------------------------
// Generators

Dataset gen_two_curve(std::uint64_t seed) {
  // Two concentric circular arcs over the same angular span.
  constexpr int kPerCurve = 50;
  constexpr double kRadius[2] = {1.0, 1.8};
  constexpr double kAngleLo = 0.05 * kPi;
  constexpr double kAngleHi = 0.95 * kPi;
  constexpr double kNoise = 0.06;
  Engine rng = make_stream(seed, "data:two-curve");
  Matrix y(2 * kPerCurve, 2);
  std::vector<int> labels;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < kPerCurve; ++i) {
      const double a = kAngleLo + (kAngleHi - kAngleLo) * uniform01(rng);
      const int row = c * kPerCurve + i;
      y(row, 0) = kRadius[c] * std::cos(a) + kNoise * standard_normal(rng);
      y(row, 1) = kRadius[c] * std::sin(a) + kNoise * standard_normal(rng);
      labels.push_back(c);
    }
  }
  Dataset d = make_dataset("two-curve", std::move(y), std::move(labels));
  d.metadata = {{"generator", "two-curve"},
                {"seed", std::to_string(seed)},
                {"radii", "1.0,1.8"},
                {"angle_span", "0.05pi..0.95pi"},
                {"noise_sd", format_double(kNoise)}};
  return d;
}

Dataset gen_three_semi(std::uint64_t seed) {
  // Interleaved half circles, alternately opening down and up.
  constexpr int kPer = 100;
  constexpr double kNoise = 0.08;
  constexpr double kCenterX[3] = {0.0, 1.0, 2.0};
  constexpr double kCenterY[3] = {0.0, 0.45, 0.0};
  constexpr double kSign[3] = {1.0, -1.0, 1.0};
  Engine rng = make_stream(seed, "data:three-semi");
  Matrix y(3 * kPer, 2);
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < kPer; ++i) {
      const double a = kPi * uniform01(rng);
      const int row = c * kPer + i;
      y(row, 0) = kCenterX[c] + std::cos(a) + kNoise * standard_normal(rng);
      y(row, 1) = kCenterY[c] + kSign[c] * std::sin(a) + kNoise * standard_normal(rng);
      labels.push_back(c);
    }
  }
  Dataset d = make_dataset("three-semi", std::move(y), std::move(labels));
  d.metadata = {{"generator", "three-semi"},
                {"seed", std::to_string(seed)},
                {"radius", "1.0"},
                {"centers", "(0,0),(1,0.45),(2,0)"},
                {"noise_sd", format_double(kNoise)}};
  return d;
}

Dataset gen_two_circle(std::uint64_t seed) {
  constexpr int kPer = 50;
  constexpr double kRadius[2] = {0.8, 2.0};
  constexpr double kNoise = 0.08;
  Engine rng = make_stream(seed, "data:two-circle");
  Matrix y(2 * kPer, 2);
  std::vector<int> labels;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < kPer; ++i) {
      const double a = 2.0 * kPi * uniform01(rng);
      const int row = c * kPer + i;
      y(row, 0) = kRadius[c] * std::cos(a) + kNoise * standard_normal(rng);
      y(row, 1) = kRadius[c] * std::sin(a) + kNoise * standard_normal(rng);
      labels.push_back(c);
    }
  }
  Dataset d = make_dataset("two-circle", std::move(y), std::move(labels));
  d.metadata = {{"generator", "two-circle"},
                {"seed", std::to_string(seed)},
                {"radii", "0.8,2.0"},
                {"noise_sd", format_double(kNoise)}};
  return d;
}

Dataset gen_pinwheel(std::uint64_t seed) {
  // Radial/tangential Gaussian blobs, rotated by an angle growing
  // exponentially with the radial coordinate.
  constexpr int kClasses = 5;
  constexpr int kPer = 50;
  constexpr double kRadialSd = 0.3;
  constexpr double kTangentialSd = 0.05;
  constexpr double kRate = 0.25;
  Engine rng = make_stream(seed, "data:pinwheel");
  Matrix y(kClasses * kPer, 2);
  std::vector<int> labels;
  for (int c = 0; c < kClasses; ++c) {
    const double base = 2.0 * kPi * c / kClasses;
    for (int i = 0; i < kPer; ++i) {
      const double f0 = kRadialSd * standard_normal(rng) + 1.0;
      const double f1 = kTangentialSd * standard_normal(rng);
      const double a = base + kRate * std::exp(f0);
      const int row = c * kPer + i;
      y(row, 0) = std::cos(a) * f0 - std::sin(a) * f1;
      y(row, 1) = std::sin(a) * f0 + std::cos(a) * f1;
      labels.push_back(c);
    }
  }
  Dataset d = make_dataset("pinwheel", std::move(y), std::move(labels));
  d.metadata = {{"generator", "pinwheel"},
                {"seed", std::to_string(seed)},
                {"radial_sd", format_double(kRadialSd)},
                {"tangential_sd", format_double(kTangentialSd)},
                {"rate", format_double(kRate)}};
  return d;
}

const std::vector<std::string>& generator_names() {
  static const std::vector<std::string> names{"two-curve", "three-semi", "two-circle", "pinwheel"};
  return names;
}

Dataset generate(const std::string& name, std::uint64_t seed) {
  if (name == "two-curve") return gen_two_curve(seed);
  if (name == "three-semi") return gen_three_semi(seed);
  if (name == "two-circle") return gen_two_circle(seed);
  if (name == "pinwheel") return gen_pinwheel(seed);
  throw ValidationError({"unknown dataset generator '" + name +
                         "' (expected two-curve, three-semi, two-circle or pinwheel)"});
}

// ---------------------------------------------------------------------------
// CSV

Dataset load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_commas(line);
      break;
    }
  }
  if (header.empty()) throw DataError(path.string() + ": empty dataset (no header row)");

  std::optional<std::size_t> label_idx;
  if (label_column) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == *label_column) label_idx = j;
    }
    if (!label_idx) {
      throw DataError(path.string() + ": label column '" + *label_column + "' not in header");
    }
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v)) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                        c + "' in column " + header[j]);
      }
      if (label_idx && j == *label_idx) {
        if (v != std::floor(v)) {
          throw DataError(path.string() + ":" + std::to_string(line_no) +
                          ": label is not an integer");
        }
        labels.push_back(static_cast<int>(v));
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": empty dataset (no data rows)");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  if (d == 0) throw DataError(path.string() + ": no feature columns");
  Matrix y(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) y(i, j) = rows[i][j];
  }
  std::optional<std::vector<int>> lab;
  if (label_idx) lab = std::move(labels);
  Dataset out = make_dataset(path.stem().string(), std::move(y), std::move(lab));
  out.columns.clear();
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (!label_idx || j != *label_idx) out.columns.push_back(header[j]);
  }
  out.metadata["source"] = path.string();
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto cols = d.columns.size() == static_cast<std::size_t>(d.dim()) ? d.columns
                                                                          : default_columns(d.dim());
  for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << cols[j];
  if (d.labels) out << ",label";
  out << '\n';
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    for (Eigen::Index j = 0; j < d.dim(); ++j) out << (j ? "," : "") << format_double(d.y(i, j));
    if (d.labels) out << ',' << (*d.labels)[i];
    out << '\n';
  }
}

}  // namespace iwmm
