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

// On-disk sample archive. A directory holding
//
//   archive.txt          key=value metadata (mode, sizes, prior, centering)
//   y_centered.csv       training observations in the centered frame
//   samples/NNNNNNN.csv  one per thinned sample: '#' lines for iter, kernel
//                        and log joint, then a "z,x0,...,x{Q-1}" table
//   diagnostics.csv      per-iteration log joint, C, acceptance, step sizes
//
// All reals are written at 17 significant digits, so reading an archive
// back reproduces it exactly.

#include <filesystem>

#include "iwmm/mcmc.hpp"

namespace iwmm {

void write_archive(const std::filesystem::path& dir, const SampleArchive& archive);
/// Throws DataError for missing or malformed files.
SampleArchive read_archive(const std::filesystem::path& dir);

void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticsRow>& rows);

}  // namespace iwmm
