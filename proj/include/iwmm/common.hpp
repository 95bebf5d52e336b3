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

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace iwmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Base of every error raised by the library. The CLI maps subclasses to
/// exit codes (see ExitCode in commands.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched dimensions between arguments.
class InputShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or command-line usage. Carries every violated field.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Malformed or empty input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Cholesky failure that survived jitter escalation.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, std::vector<double> jitters)
      : Error(what), jitters_(std::move(jitters)) {}
  const std::vector<double>& attempted_jitter() const { return jitters_; }

 private:
  std::vector<double> jitters_;
};

/// Operation requested for a dimension it does not support (e.g. grids for D != 2).
class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kLogPi = 1.1447298858494002;
inline constexpr double kLog2Pi = 1.8378770664093453;

}  // namespace iwmm
