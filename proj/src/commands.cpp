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
#include "iwmm/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "iwmm/archive.hpp"
#include "iwmm/log.hpp"

namespace fs = std::filesystem;

namespace iwmm {

ExitCode exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const InputShapeError*>(&e) ||
      dynamic_cast<const UnsupportedDimensionError*>(&e)) {
    return ExitCode::usage;
  }
  if (dynamic_cast<const DataError*>(&e)) return ExitCode::data;
  if (dynamic_cast<const ConditioningError*>(&e)) return ExitCode::numerical;
  return ExitCode::internal;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Manifest

std::string RunManifest::text() const {
  std::ostringstream out;
  out << "manifest.command=" << command << '\n';
  out << "manifest.version=" << kVersion << '\n';
  for (const auto& [k, v] : args) out << "manifest.arg." << k << '=' << v << '\n';
  if (!data_fingerprint.empty()) out << "manifest.data_fingerprint=" << data_fingerprint << '\n';
  out << format_config(config);
  return out.str();
}

void RunManifest::write(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text();
}

RunManifest RunManifest::read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({"manifest: cannot open " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  const auto pairs = parse_key_values(ss.str());
  RunManifest m;
  m.config = apply_config(pairs);
  for (const auto& [k, v] : pairs) {
    if (k == "manifest.command") m.command = v;
    else if (k == "manifest.data_fingerprint") m.data_fingerprint = v;
    else if (k.rfind("manifest.arg.", 0) == 0) m.args[k.substr(13)] = v;
  }
  if (m.command.empty()) throw ValidationError({"manifest: missing manifest.command"});
  return m;
}

fs::path manifest_path_for_file(const fs::path& out) {
  fs::path p = out;
  p += ".manifest.txt";
  return p;
}

namespace {

void ensure_parent(const fs::path& out) {
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
}

std::string abs_string(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

const std::string& arg(const RunManifest& m, const std::string& key) {
  const auto it = m.args.find(key);
  if (it == m.args.end()) throw ValidationError({"manifest: missing manifest.arg." + key});
  return it->second;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::string bounds_string(const GridBounds& b) {
  return format_double(b.x_min) + "," + format_double(b.x_max) + "," + format_double(b.y_min) +
         "," + format_double(b.y_max);
}

GridBounds parse_bounds(const std::string& s) {
  const Vector v = [&] {
    try {
      return parse_vector(s);
    } catch (const std::exception&) {
      throw ValidationError({"density.bounds: expected xmin,xmax,ymin,ymax"});
    }
  }();
  if (v.size() != 4) throw ValidationError({"density.bounds: expected xmin,xmax,ymin,ymax"});
  return {v(0), v(1), v(2), v(3)};
}

std::uint64_t archive_fingerprint(const SampleArchive& a) {
  return fingerprint(make_dataset("archive", a.y));
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

void cmd_generate(const std::string& name, std::uint64_t seed, const fs::path& out) {
  const Dataset d = generate(name, seed);
  ensure_parent(out);
  RunManifest m;
  m.command = "generate";
  m.args = {{"name", name}, {"seed", std::to_string(seed)}, {"out", abs_string(out)}};
  for (const auto& [k, v] : d.metadata) m.args["data." + k] = v;
  m.data_fingerprint = hex64(fingerprint(d));
  m.write(manifest_path_for_file(out));
  write_csv(out, d);
}

Dataset load_dataset(const fs::path& path, const std::optional<std::string>& label_column) {
  if (label_column) return load_csv(path, label_column);
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  for (const auto& c : split_list(header, ',')) {
    std::string t = c;
    while (!t.empty() && (t.back() == '\r' || t.back() == ' ')) t.pop_back();
    if (t == "label") return load_csv(path, std::string("label"));
  }
  return load_csv(path);
}

SampleArchive cmd_fit(const fs::path& data_path, const RunConfig& config, const fs::path& out_dir,
                      const std::optional<std::string>& label_column) {
  const Dataset data = load_dataset(data_path, label_column);
  config.sampler().validate(data.dim());
  fs::create_directories(out_dir);

  RunManifest m;
  m.command = "fit";
  m.args = {{"data", abs_string(data_path)}, {"out", abs_string(out_dir)}};
  if (label_column) m.args["label_column"] = *label_column;
  m.config = config;
  m.data_fingerprint = hex64(fingerprint(data));
  m.write(out_dir / "manifest.txt");

  const auto t0 = std::chrono::steady_clock::now();
  const SampleArchive archive = run_chain(data, config.sampler());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_archive(out_dir, archive);
  std::ofstream timing(out_dir / "timing.txt");
  timing << "sampling_seconds=" << secs << '\n';
  log::info("fit finished in " + std::to_string(secs) + " s");
  return archive;
}

GridBounds default_bounds(const SampleArchive& archive) {
  if (archive.data_dim() != 2) {
    throw UnsupportedDimensionError("density grids need D = 2, archive has D = " +
                                    std::to_string(archive.data_dim()));
  }
  const Matrix y = archive.y.rowwise() + archive.means.transpose();
  double lo[2], hi[2];
  for (int j = 0; j < 2; ++j) {
    const double mean = y.col(j).mean();
    const double sd = std::sqrt((y.col(j).array() - mean).square().mean());
    lo[j] = std::min(mean - 5.0 * sd, y.col(j).minCoeff());
    hi[j] = std::max(mean + 5.0 * sd, y.col(j).maxCoeff());
  }
  return {lo[0], hi[0], lo[1], hi[1]};
}

DensityGrid cmd_density(const fs::path& archive_dir, const std::optional<GridBounds>& bounds,
                        int nx, int ny, const RunConfig& config, const fs::path& out) {
  const SampleArchive archive = read_archive(archive_dir);
  const GridBounds b = bounds ? *bounds : default_bounds(archive);
  ensure_parent(out);
  RunManifest m;
  m.command = "density";
  m.args = {{"archive", abs_string(archive_dir)},
            {"bounds", bounds_string(b)},
            {"resolution", std::to_string(nx) + "," + std::to_string(ny)},
            {"out", abs_string(out)}};
  m.config = config;
  m.data_fingerprint = hex64(archive_fingerprint(archive));
  m.write(manifest_path_for_file(out));

  const DensityGrid grid = density_grid(archive, b, nx, ny, config.predictive());
  write_grid_csv(out, grid);
  log::info("grid mass " + format_double(grid.mass()) + ", max relative MC error " +
            format_double(grid.max_relative_std_error));
  return grid;
}

PriorSample cmd_prior_sample(int n, int q, int d, std::uint64_t seed, const RunConfig& config,
                             const fs::path& out_dir) {
  std::vector<std::string> bad;
  if (n < 1) bad.emplace_back("prior-sample.n: must be >= 1");
  if (q < 1) bad.emplace_back("prior-sample.q: must be >= 1");
  if (d < 1) bad.emplace_back("prior-sample.d: must be >= 1");
  if (!config.sampler().kernel_init.valid()) bad.emplace_back("kernel: hyperparameters must be finite");
  GWPrior prior;
  if (q >= 1) {
    prior = config.sampler().resolved_prior(q);
    for (auto& v : prior.violations()) bad.push_back(v);
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));

  fs::create_directories(out_dir);
  RunManifest m;
  m.command = "prior-sample";
  m.args = {{"n", std::to_string(n)},
            {"q", std::to_string(q)},
            {"d", std::to_string(d)},
            {"seed", std::to_string(seed)},
            {"out", abs_string(out_dir)}};
  m.config = config;
  m.write(out_dir / "manifest.txt");

  const PriorSample s = sample_prior(n, q, d, prior, config.sampler().kernel_init, seed);
  write_csv(out_dir / "x.csv", make_dataset("x", s.x));
  write_csv(out_dir / "y.csv", make_dataset("y", s.y, s.z));
  std::ofstream z(out_dir / "z.csv", std::ios::binary);
  z << "z\n";
  for (int v : s.z) z << v << '\n';
  return s;
}

std::vector<MetricReport> cmd_benchmark(const std::vector<fs::path>& datasets,
                                        const RunConfig& config, const fs::path& out) {
  std::vector<std::string> bad;
  if (datasets.empty()) bad.emplace_back("benchmark: no datasets given");
  if (config.methods.empty()) bad.emplace_back("benchmark.methods: method list is empty");
  for (const auto& meth : config.methods) {
    if (std::find(benchmark_methods().begin(), benchmark_methods().end(), meth) ==
        benchmark_methods().end()) {
      bad.push_back("benchmark.methods: unknown method '" + meth + "'");
    }
  }
  if (!config.benchmark.rand && !config.benchmark.loglik) {
    bad.emplace_back("benchmark.metrics: no metric selected");
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));

  std::vector<Dataset> loaded;
  std::string paths;
  std::uint64_t fp = 0;
  for (const auto& p : datasets) {
    loaded.push_back(load_dataset(p));
    paths += (paths.empty() ? "" : ";") + abs_string(p);
    fp = fp * 1099511628211ULL ^ fingerprint(loaded.back());
  }
  ensure_parent(out);
  RunManifest m;
  m.command = "benchmark";
  m.args = {{"datasets", paths},
            {"out", abs_string(out)},
            {"test_loglik_estimator",
             "mean held-out log density; iwmm uses latent-draw mixtures over all thinned samples "
             "with predictive.draws per sample, igmm the exact collapsed predictive averaged over "
             "thinned samples, kde the leave-one-out bandwidth"},
            {"rand_summary", "training-fold assignments of the highest log-joint sample"}};
  m.config = config;
  m.data_fingerprint = hex64(fp);
  m.write(manifest_path_for_file(out));

  std::vector<MetricReport> all;
  BenchmarkConfig bc = config.benchmark;
  for (const auto& d : loaded) {
    bc.rand = config.benchmark.rand && d.labels.has_value();
    if (config.benchmark.rand && !d.labels) log::warn(d.name + ": no labels, skipping Rand index");
    auto reports = run_benchmark(d, config.methods, bc);
    all.insert(all.end(), reports.begin(), reports.end());
  }
  write_reports_csv(out, all);
  return all;
}

void cmd_replay(const fs::path& manifest, const std::optional<fs::path>& out) {
  const RunManifest m = RunManifest::read(manifest);
  const fs::path dest = out ? *out : fs::path(arg(m, "out"));
  if (m.command == "generate") {
    cmd_generate(arg(m, "name"), std::stoull(arg(m, "seed")), dest);
  } else if (m.command == "fit") {
    const fs::path data = arg(m, "data");
    std::optional<std::string> label;
    if (m.args.count("label_column")) label = m.args.at("label_column");
    if (!m.data_fingerprint.empty() && hex64(fingerprint(load_dataset(data, label))) != m.data_fingerprint) {
      throw DataError("replay: " + data.string() + " no longer matches the recorded fingerprint");
    }
    cmd_fit(data, m.config, dest, label);
  } else if (m.command == "density") {
    const auto res = split_list(arg(m, "resolution"), ',');
    if (res.size() != 2) throw ValidationError({"manifest: bad resolution"});
    cmd_density(arg(m, "archive"), parse_bounds(arg(m, "bounds")), std::stoi(res[0]),
                std::stoi(res[1]), m.config, dest);
  } else if (m.command == "prior-sample") {
    cmd_prior_sample(std::stoi(arg(m, "n")), std::stoi(arg(m, "q")), std::stoi(arg(m, "d")),
                     std::stoull(arg(m, "seed")), m.config, dest);
  } else if (m.command == "benchmark") {
    std::vector<fs::path> paths;
    for (const auto& p : split_list(arg(m, "datasets"), ';')) paths.emplace_back(p);
    cmd_benchmark(paths, m.config, dest);
  } else {
    throw ValidationError({"manifest: unknown command '" + m.command + "'"});
  }
}

}  // namespace iwmm
