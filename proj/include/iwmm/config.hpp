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

// Flat key=value configuration with dotted namespaces, e.g.
//
//   sampler.total_iters=5000
//   hmc_x.step_size=0.01
//   prior.S=1,0;0,1
//
// Blank lines and lines starting with '#' are ignored. Keys under
// "manifest." are informational and skipped, so a run manifest can be fed
// back as a config.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "iwmm/evaluation.hpp"

namespace iwmm {

struct RunConfig {
  BenchmarkConfig benchmark;  ///< holds the sampler and predictive settings too
  std::vector<std::string> methods = benchmark_methods();

  SamplerConfig& sampler() { return benchmark.sampler; }
  const SamplerConfig& sampler() const { return benchmark.sampler; }
  PredictiveConfig& predictive() { return benchmark.predictive; }
  const PredictiveConfig& predictive() const { return benchmark.predictive; }
};

/// Raw key/value pairs in file order. Throws ValidationError listing every
/// malformed line.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

/// Applies pairs over `base`. Unknown keys and unparsable values are all
/// collected into one ValidationError.
RunConfig apply_config(const std::vector<std::pair<std::string, std::string>>& pairs,
                       RunConfig base = {});
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its current value, in a fixed order. Parses back to an
/// identical config.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);
std::string format_config(const RunConfig& config);

/// Matrix as "a,b;c,d" and vector as "a,b".
std::string format_matrix(const Matrix& m);
std::string format_vector(const Vector& v);
Matrix parse_matrix(const std::string& text);
Vector parse_vector(const std::string& text);

std::string to_string(SamplerMode m);
std::string to_string(InitScheme s);

}  // namespace iwmm
