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

// Library side of the command-line tool. Each command writes a manifest
// (key=value, the full resolved config plus "manifest." entries naming the
// command and its arguments) before doing any work; cmd_replay re-executes a
// manifest.

#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iwmm/config.hpp"
#include "iwmm/predictive.hpp"

namespace iwmm {

inline constexpr const char* kVersion = "0.1.0";

enum class ExitCode : int {
  ok = 0,
  internal = 1,
  usage = 2,
  data = 3,
  numerical = 4,
};

/// Exit code for an exception escaping a command.
ExitCode exit_code_for(const std::exception& e);

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> args;  ///< command arguments (manifest.arg.*)
  RunConfig config;
  std::string data_fingerprint;  ///< hex; empty when the command has no input data

  std::string text() const;
  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
};

/// Manifest path for a command writing a single file.
std::filesystem::path manifest_path_for_file(const std::filesystem::path& out);

void cmd_generate(const std::string& name, std::uint64_t seed, const std::filesystem::path& out);

/// Reads a CSV; a column named exactly `label_column` (default "label", if
/// present) becomes the ground-truth labels.
Dataset load_dataset(const std::filesystem::path& path,
                     const std::optional<std::string>& label_column = std::nullopt);

/// Runs the sampler and writes the archive, manifest.txt and timing.txt into out_dir.
SampleArchive cmd_fit(const std::filesystem::path& data_path, const RunConfig& config,
                      const std::filesystem::path& out_dir,
                      const std::optional<std::string>& label_column = std::nullopt);

/// Default grid bounds: per-axis mean +/- 5 standard deviations of the training
/// data, widened to include every point.
GridBounds default_bounds(const SampleArchive& archive);

DensityGrid cmd_density(const std::filesystem::path& archive_dir,
                        const std::optional<GridBounds>& bounds, int nx, int ny,
                        const RunConfig& config, const std::filesystem::path& out);

/// Draws (X, Z, Y) from the generative model and writes x.csv, z.csv, y.csv.
PriorSample cmd_prior_sample(int n, int q, int d, std::uint64_t seed, const RunConfig& config,
                             const std::filesystem::path& out_dir);

std::vector<MetricReport> cmd_benchmark(const std::vector<std::filesystem::path>& datasets,
                                        const RunConfig& config, const std::filesystem::path& out);

/// Re-executes a manifest. `out` overrides the recorded output location.
void cmd_replay(const std::filesystem::path& manifest,
                const std::optional<std::filesystem::path>& out = std::nullopt);

std::string hex64(std::uint64_t v);

}  // namespace iwmm
