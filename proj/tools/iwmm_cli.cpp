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
#include <cstdlib>
#include <iostream>

#include <omp.h>

#include "CLI11.hpp"
#include "iwmm/commands.hpp"
#include "iwmm/log.hpp"

namespace fs = std::filesystem;
using namespace iwmm;

namespace {

RunConfig config_from(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig c = path.empty() ? RunConfig{} : load_config(path);
  std::string text;
  for (const auto& o : overrides) text += o + "\n";
  return apply_config(parse_key_values(text), c);
}

void print_violations(const ValidationError& e) {
  std::cerr << "error: invalid configuration or arguments\n";
  for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* t = std::getenv("IWMM_THREADS")) {
    const int n = std::atoi(t);
    if (n > 0) omp_set_num_threads(n);
  }

  CLI::App app{"Infinite warped mixture model: clustering and density estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "More log output (repeat for debug)");

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", overrides, "override one config key (key=value)");
  };

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
  std::string gen_name;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("name", gen_name, "two-curve, three-semi, two-circle or pinwheel")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("-o,--out", gen_out, "output CSV")->required();

  auto* fit = app.add_subcommand("fit", "Run the posterior sampler and write a sample archive");
  std::string fit_data, fit_out, fit_label;
  fit->add_option("data", fit_data, "input CSV with header")->required()->check(CLI::ExistingFile);
  fit->add_option("-o,--out", fit_out, "archive directory")->required();
  fit->add_option("--label-column", fit_label, "ground-truth label column (default: 'label' if present)");
  add_config(fit);

  auto* den = app.add_subcommand("density", "Evaluate the predictive density on a 2-D grid");
  std::string den_archive, den_out;
  std::vector<double> den_bounds;
  std::vector<int> den_res{200, 200};
  den->add_option("archive", den_archive, "archive directory")->required();
  den->add_option("-o,--out", den_out, "grid CSV")->required();
  den->add_option("--bounds", den_bounds, "xmin xmax ymin ymax (default: data +/- 5 sd)")
      ->expected(4);
  den->add_option("--resolution", den_res, "nx ny")->expected(2);
  add_config(den);

  auto* pri = app.add_subcommand("prior-sample", "Draw X, Z and Y from the generative model");
  int pri_n = 100, pri_q = 2, pri_d = 2;
  std::uint64_t pri_seed = 1;
  std::string pri_out;
  pri->add_option("-n", pri_n, "number of points");
  pri->add_option("-q", pri_q, "latent dimension");
  pri->add_option("-d", pri_d, "observed dimension");
  pri->add_option("--seed", pri_seed, "seed");
  pri->add_option("-o,--out", pri_out, "output directory")->required();
  add_config(pri);

  auto* ben = app.add_subcommand("benchmark", "Cross-validated clustering and density metrics");
  std::vector<std::string> ben_data;
  std::string ben_out;
  std::string ben_methods;
  ben->add_option("datasets", ben_data, "CSV files (a 'label' column enables the Rand index)")
      ->required()
      ->check(CLI::ExistingFile);
  ben->add_option("-o,--out", ben_out, "metrics CSV")->required();
  auto* methods_opt = ben->add_option("--methods", ben_methods, "comma list of kde, igmm, iwmm_q2, iwmm_qd");
  add_config(ben);

  auto* rep = app.add_subcommand("replay", "Re-run a command from its manifest");
  std::string rep_manifest, rep_out;
  rep->add_option("manifest", rep_manifest, "manifest file")->required()->check(CLI::ExistingFile);
  rep->add_option("-o,--out", rep_out, "write outputs here instead of the recorded location");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }
  log::set_level(verbosity >= 2 ? log::Level::debug : verbosity == 1 ? log::Level::info : log::Level::warn);

  try {
    if (*gen) {
      cmd_generate(gen_name, gen_seed, gen_out);
    } else if (*fit) {
      const RunConfig c = config_from(config_path, overrides);
      std::optional<std::string> label;
      if (!fit_label.empty()) label = fit_label;
      const SampleArchive a = cmd_fit(fit_data, c, fit_out, label);
      std::cout << "samples=" << a.samples.size() << " final_clusters="
                << (a.diagnostics.empty() ? 0 : a.diagnostics.back().num_clusters) << '\n';
    } else if (*den) {
      const RunConfig c = config_from(config_path, overrides);
      std::optional<GridBounds> b;
      if (!den_bounds.empty()) b = GridBounds{den_bounds[0], den_bounds[1], den_bounds[2], den_bounds[3]};
      const DensityGrid g = cmd_density(den_archive, b, den_res[0], den_res[1], c, den_out);
      std::cout << "mass=" << format_double(g.mass()) << '\n';
    } else if (*pri) {
      const RunConfig c = config_from(config_path, overrides);
      const PriorSample s = cmd_prior_sample(pri_n, pri_q, pri_d, pri_seed, c, pri_out);
      int clusters = 0;
      for (int z : s.z) clusters = std::max(clusters, z + 1);
      std::cout << "clusters=" << clusters << '\n';
    } else if (*ben) {
      if (methods_opt->count() > 0) overrides.push_back("benchmark.methods=" + ben_methods);
      const RunConfig c = config_from(config_path, overrides);
      std::vector<fs::path> paths(ben_data.begin(), ben_data.end());
      for (const auto& r : cmd_benchmark(paths, c, ben_out)) {
        std::cout << r.dataset << ' ' << r.method << ' ' << r.metric << ' '
                  << format_double(r.mean) << " +/- " << format_double(r.std_error) << '\n';
      }
    } else if (*rep) {
      std::optional<fs::path> out;
      if (!rep_out.empty()) out = rep_out;
      cmd_replay(rep_manifest, out);
    }
  } catch (const ValidationError& e) {
    print_violations(e);
    return static_cast<int>(ExitCode::usage);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(exit_code_for(e));
  }
  return 0;
}
