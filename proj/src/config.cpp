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
#include "iwmm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace iwmm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a finite number, got '" + s + "'");
  }
  return v;
}

long long to_int(const std::string& s) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("expected an integer, got '" + s + "'");
  }
  return v;
}

std::uint64_t to_seed(const std::string& s) {
  const long long v = to_int(s);
  if (v < 0) throw std::invalid_argument("seed must be non-negative");
  return static_cast<std::uint64_t>(v);
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  std::string key;
  Setter set;
  Getter get;
};

void add_hmc(std::vector<Field>& f, const std::string& prefix, HmcConfig SamplerConfig::*member) {
  auto h = [member](RunConfig& c) -> HmcConfig& { return c.sampler().*member; };
  auto ch = [member](const RunConfig& c) -> const HmcConfig& { return c.sampler().*member; };
  f.push_back({prefix + ".step_size", [h](RunConfig& c, const std::string& v) { h(c).step_size = to_double(v); },
               [ch](const RunConfig& c) { return format_double(ch(c).step_size); }});
  f.push_back({prefix + ".num_leapfrog",
               [h](RunConfig& c, const std::string& v) { h(c).num_leapfrog = static_cast<int>(to_int(v)); },
               [ch](const RunConfig& c) { return std::to_string(ch(c).num_leapfrog); }});
  f.push_back({prefix + ".target_accept",
               [h](RunConfig& c, const std::string& v) { h(c).target_accept = to_double(v); },
               [ch](const RunConfig& c) { return format_double(ch(c).target_accept); }});
  f.push_back({prefix + ".adapt_iters",
               [h](RunConfig& c, const std::string& v) { h(c).adapt_iters = static_cast<int>(to_int(v)); },
               [ch](const RunConfig& c) { return std::to_string(ch(c).adapt_iters); }});
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto int_field = [&f](const std::string& key, int SamplerConfig::*m) {
      f.push_back({key, [m](RunConfig& c, const std::string& v) { c.sampler().*m = static_cast<int>(to_int(v)); },
                   [m](const RunConfig& c) { return std::to_string(c.sampler().*m); }});
    };
    int_field("sampler.total_iters", &SamplerConfig::total_iters);
    int_field("sampler.burn_in", &SamplerConfig::burn_in);
    int_field("sampler.thin", &SamplerConfig::thin);
    int_field("sampler.latent_dim", &SamplerConfig::latent_dim);
    f.push_back({"sampler.seed", [](RunConfig& c, const std::string& v) { c.sampler().seed = to_seed(v); },
                 [](const RunConfig& c) { return std::to_string(c.sampler().seed); }});
    f.push_back({"sampler.mode",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "iwmm") c.sampler().mode = SamplerMode::iwmm;
                   else if (v == "igmm") c.sampler().mode = SamplerMode::igmm;
                   else throw std::invalid_argument("expected iwmm or igmm, got '" + v + "'");
                 },
                 [](const RunConfig& c) { return to_string(c.sampler().mode); }});
    f.push_back({"sampler.init",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "auto") c.sampler().init = InitScheme::automatic;
                   else if (v == "observed") c.sampler().init = InitScheme::observed;
                   else if (v == "pca") c.sampler().init = InitScheme::pca;
                   else throw std::invalid_argument("expected auto, observed or pca, got '" + v + "'");
                 },
                 [](const RunConfig& c) { return to_string(c.sampler().init); }});
    f.push_back({"sampler.sample_theta",
                 [](RunConfig& c, const std::string& v) { c.sampler().sample_theta = to_bool(v); },
                 [](const RunConfig& c) { return from_bool(c.sampler().sample_theta); }});
    f.push_back({"sampler.check_joint",
                 [](RunConfig& c, const std::string& v) { c.sampler().check_joint = to_bool(v); },
                 [](const RunConfig& c) { return from_bool(c.sampler().check_joint); }});
    add_hmc(f, "hmc_x", &SamplerConfig::hmc_x);
    add_hmc(f, "hmc_theta", &SamplerConfig::hmc_theta);

    // Empty u / S mean "defaults for the resolved latent dimension".
    f.push_back({"prior.u",
                 [](RunConfig& c, const std::string& v) {
                   c.sampler().prior.u = v.empty() ? Vector() : parse_vector(v);
                 },
                 [](const RunConfig& c) { return format_vector(c.sampler().prior.u); }});
    f.push_back({"prior.r", [](RunConfig& c, const std::string& v) { c.sampler().prior.r = to_double(v); },
                 [](const RunConfig& c) { return format_double(c.sampler().prior.r); }});
    f.push_back({"prior.S",
                 [](RunConfig& c, const std::string& v) {
                   c.sampler().prior.s = v.empty() ? Matrix() : parse_matrix(v);
                 },
                 [](const RunConfig& c) { return format_matrix(c.sampler().prior.s); }});
    f.push_back({"prior.nu", [](RunConfig& c, const std::string& v) { c.sampler().prior.nu = to_double(v); },
                 [](const RunConfig& c) { return format_double(c.sampler().prior.nu); }});
    f.push_back({"prior.eta", [](RunConfig& c, const std::string& v) { c.sampler().prior.eta = to_double(v); },
                 [](const RunConfig& c) { return format_double(c.sampler().prior.eta); }});

    auto kernel_field = [&f](const std::string& key, double KernelParams::*m) {
      f.push_back({key, [m](RunConfig& c, const std::string& v) { c.sampler().kernel_init.*m = to_double(v); },
                   [m](const RunConfig& c) { return format_double(c.sampler().kernel_init.*m); }});
    };
    kernel_field("kernel.log_alpha", &KernelParams::log_alpha);
    kernel_field("kernel.log_ell", &KernelParams::log_ell);
    kernel_field("kernel.log_beta", &KernelParams::log_beta);

    f.push_back({"predictive.draws",
                 [](RunConfig& c, const std::string& v) { c.predictive().draws = static_cast<int>(to_int(v)); },
                 [](const RunConfig& c) { return std::to_string(c.predictive().draws); }});
    f.push_back({"predictive.seed", [](RunConfig& c, const std::string& v) { c.predictive().seed = to_seed(v); },
                 [](const RunConfig& c) { return std::to_string(c.predictive().seed); }});

    f.push_back({"benchmark.folds",
                 [](RunConfig& c, const std::string& v) { c.benchmark.folds = static_cast<int>(to_int(v)); },
                 [](const RunConfig& c) { return std::to_string(c.benchmark.folds); }});
    f.push_back({"benchmark.seed", [](RunConfig& c, const std::string& v) { c.benchmark.fold_seed = to_seed(v); },
                 [](const RunConfig& c) { return std::to_string(c.benchmark.fold_seed); }});
    f.push_back({"benchmark.metrics",
                 [](RunConfig& c, const std::string& v) {
                   c.benchmark.rand = false;
                   c.benchmark.loglik = false;
                   for (const auto& m : split(v, ',')) {
                     if (m == "rand") c.benchmark.rand = true;
                     else if (m == "test_loglik") c.benchmark.loglik = true;
                     else throw std::invalid_argument("unknown metric '" + m + "'");
                   }
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   if (c.benchmark.rand) s = "rand";
                   if (c.benchmark.loglik) s += s.empty() ? "test_loglik" : ",test_loglik";
                   return s;
                 }});
    f.push_back({"benchmark.methods",
                 [](RunConfig& c, const std::string& v) {
                   c.methods.clear();
                   for (const auto& m : split(v, ',')) {
                     if (!m.empty()) c.methods.push_back(m);
                   }
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (const auto& m : c.methods) s += (s.empty() ? "" : ",") + m;
                   return s;
                 }});
    f.push_back({"benchmark.parallel_jobs",
                 [](RunConfig& c, const std::string& v) { c.benchmark.parallel_jobs = to_bool(v); },
                 [](const RunConfig& c) { return from_bool(c.benchmark.parallel_jobs); }});
    return f;
  }();
  return table;
}

}  // namespace

std::string to_string(SamplerMode m) { return m == SamplerMode::iwmm ? "iwmm" : "igmm"; }

std::string to_string(InitScheme s) {
  switch (s) {
    case InitScheme::observed: return "observed";
    case InitScheme::pca: return "pca";
    default: return "auto";
  }
}

std::string format_vector(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v(i));
  return s;
}

std::string format_matrix(const Matrix& m) {
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += ';';
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += (j ? "," : "") + format_double(m(i, j));
  }
  return s;
}

Vector parse_vector(const std::string& text) {
  const auto cells = split(text, ',');
  Vector v(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(cells[i]);
  return v;
}

Matrix parse_matrix(const std::string& text) {
  const auto rows = split(text, ';');
  std::vector<Vector> parsed;
  for (const auto& r : rows) parsed.push_back(parse_vector(r));
  const Eigen::Index cols = parsed.empty() ? 0 : parsed.front().size();
  Matrix m(static_cast<Eigen::Index>(parsed.size()), cols);
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].size() != cols) throw std::invalid_argument("matrix rows have unequal length");
    m.row(static_cast<Eigen::Index>(i)) = parsed[i].transpose();
  }
  return m;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<std::string> bad;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || trim(t.substr(0, eq)).empty()) {
      bad.push_back("line " + std::to_string(line_no) + ": expected key=value");
      continue;
    }
    out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return out;
}

RunConfig apply_config(const std::vector<std::pair<std::string, std::string>>& pairs,
                       RunConfig base) {
  std::vector<std::string> bad;
  for (const auto& [key, value] : pairs) {
    if (key.rfind("manifest.", 0) == 0) continue;
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) {
      bad.push_back(key + ": unknown key");
      continue;
    }
    try {
      it->set(base, value);
    } catch (const std::exception& e) {
      bad.push_back(key + ": " + e.what());
    }
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return base;
}

RunConfig parse_config(const std::string& text) { return apply_config(parse_key_values(text)); }

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({"config: cannot open " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(config));
  return out;
}

std::string format_config(const RunConfig& config) {
  std::string s;
  for (const auto& [k, v] : config_entries(config)) s += k + "=" + v + "\n";
  return s;
}

}  // namespace iwmm
