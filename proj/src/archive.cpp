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
#include "iwmm/archive.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "iwmm/config.hpp"
#include "iwmm/data.hpp"

namespace fs = std::filesystem;

namespace iwmm {

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

double parse_real(const std::string& s, const fs::path& where) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw DataError(where.string() + ": bad number '" + s + "'");
  }
  return v;
}

std::map<std::string, std::string> read_key_values(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("archive: cannot open " + p.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(p.string() + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key,
                        const fs::path& where) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw DataError(where.string() + ": missing key " + key);
  return it->second;
}

Matrix read_matrix_csv(const fs::path& p, Eigen::Index cols) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("archive: cannot open " + p.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (static_cast<Eigen::Index>(cells.size()) != cols) {
      throw DataError(p.string() + ": expected " + std::to_string(cols) + " columns");
    }
    std::vector<double> r;
    for (const auto& c : cells) r.push_back(parse_real(c, p));
    rows.push_back(std::move(r));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = rows[i][j];
  }
  return m;
}

std::string sample_name(int iter) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%07d.csv", iter);
  return buf;
}

}  // namespace

void write_diagnostics_csv(const fs::path& path, const std::vector<DiagnosticsRow>& rows) {
  auto out = open_out(path);
  out << "iteration,log_joint,num_clusters,accept_x,accept_theta,step_x,step_theta\n";
  for (const auto& r : rows) {
    out << r.iter << ',' << format_double(r.log_joint) << ',' << r.num_clusters << ','
        << format_double(r.accept_x) << ',' << format_double(r.accept_theta) << ','
        << format_double(r.step_x) << ',' << format_double(r.step_theta) << '\n';
  }
}

void write_archive(const fs::path& dir, const SampleArchive& archive) {
  fs::create_directories(dir / "samples");
  {
    auto out = open_out(dir / "archive.txt");
    out << "mode=" << to_string(archive.mode) << '\n';
    out << "num_points=" << archive.y.rows() << '\n';
    out << "data_dim=" << archive.y.cols() << '\n';
    out << "latent_dim=" << archive.latent_dim() << '\n';
    out << "num_samples=" << archive.samples.size() << '\n';
    out << "non_finite_rejects=" << archive.non_finite_rejects << '\n';
    out << "means=" << format_vector(archive.means) << '\n';
    out << "prior.u=" << format_vector(archive.prior.u) << '\n';
    out << "prior.r=" << format_double(archive.prior.r) << '\n';
    out << "prior.S=" << format_matrix(archive.prior.s) << '\n';
    out << "prior.nu=" << format_double(archive.prior.nu) << '\n';
    out << "prior.eta=" << format_double(archive.prior.eta) << '\n';
  }
  {
    auto out = open_out(dir / "y_centered.csv");
    for (Eigen::Index j = 0; j < archive.y.cols(); ++j) out << (j ? "," : "") << 'y' << j;
    out << '\n';
    for (Eigen::Index i = 0; i < archive.y.rows(); ++i) {
      for (Eigen::Index j = 0; j < archive.y.cols(); ++j) {
        out << (j ? "," : "") << format_double(archive.y(i, j));
      }
      out << '\n';
    }
  }
  for (const auto& s : archive.samples) {
    auto out = open_out(dir / "samples" / sample_name(s.iter));
    out << "# iter=" << s.iter << '\n';
    out << "# log_alpha=" << format_double(s.kernel.log_alpha) << '\n';
    out << "# log_ell=" << format_double(s.kernel.log_ell) << '\n';
    out << "# log_beta=" << format_double(s.kernel.log_beta) << '\n';
    out << "# log_joint=" << format_double(s.log_joint) << '\n';
    out << 'z';
    for (Eigen::Index j = 0; j < s.x.cols(); ++j) out << ",x" << j;
    out << '\n';
    for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
      out << s.z[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < s.x.cols(); ++j) out << ',' << format_double(s.x(i, j));
      out << '\n';
    }
  }
  write_diagnostics_csv(dir / "diagnostics.csv", archive.diagnostics);
}

SampleArchive read_archive(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("archive: " + dir.string() + " is not a directory");
  const fs::path meta = dir / "archive.txt";
  const auto kv = read_key_values(meta);
  SampleArchive a;
  try {
    const std::string& mode = need(kv, "mode", meta);
    if (mode == "iwmm") a.mode = SamplerMode::iwmm;
    else if (mode == "igmm") a.mode = SamplerMode::igmm;
    else throw DataError(meta.string() + ": unknown mode '" + mode + "'");
    const Eigen::Index n = std::stol(need(kv, "num_points", meta));
    const Eigen::Index d = std::stol(need(kv, "data_dim", meta));
    const Eigen::Index q = std::stol(need(kv, "latent_dim", meta));
    const std::size_t n_samples = std::stoul(need(kv, "num_samples", meta));
    a.non_finite_rejects = std::stoi(need(kv, "non_finite_rejects", meta));
    a.means = parse_vector(need(kv, "means", meta));
    a.prior.u = parse_vector(need(kv, "prior.u", meta));
    a.prior.r = parse_real(need(kv, "prior.r", meta), meta);
    a.prior.s = parse_matrix(need(kv, "prior.S", meta));
    a.prior.nu = parse_real(need(kv, "prior.nu", meta), meta);
    a.prior.eta = parse_real(need(kv, "prior.eta", meta), meta);
    if (a.means.size() != d || a.prior.dim() != q) {
      throw DataError(meta.string() + ": dimensions disagree with stored vectors");
    }
    a.prior.validate();

    a.y = read_matrix_csv(dir / "y_centered.csv", d);
    if (a.y.rows() != n) throw DataError("archive: y_centered.csv has the wrong number of rows");

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir / "samples")) {
      if (e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.size() != n_samples) throw DataError("archive: sample count disagrees with archive.txt");
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      if (!in) throw DataError("archive: cannot open " + f.string());
      SampleRecord rec;
      std::map<std::string, std::string> head;
      std::string line;
      while (std::getline(in, line) && line.rfind("# ", 0) == 0) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError(f.string() + ": malformed comment line");
        head[line.substr(2, eq - 2)] = line.substr(eq + 1);
      }
      rec.iter = std::stoi(need(head, "iter", f));
      rec.kernel.log_alpha = parse_real(need(head, "log_alpha", f), f);
      rec.kernel.log_ell = parse_real(need(head, "log_ell", f), f);
      rec.kernel.log_beta = parse_real(need(head, "log_beta", f), f);
      rec.log_joint = parse_real(need(head, "log_joint", f), f);
      rec.x.resize(n, q);
      Eigen::Index i = 0;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        if (static_cast<Eigen::Index>(cells.size()) != q + 1 || i >= n) {
          throw DataError(f.string() + ": malformed sample row");
        }
        rec.z.push_back(static_cast<int>(parse_real(cells[0], f)));
        for (Eigen::Index j = 0; j < q; ++j) rec.x(i, j) = parse_real(cells[j + 1], f);
        ++i;
      }
      if (i != n) throw DataError(f.string() + ": expected " + std::to_string(n) + " rows");
      a.samples.push_back(std::move(rec));
    }

    const fs::path diag = dir / "diagnostics.csv";
    const Matrix dm = read_matrix_csv(diag, 7);
    for (Eigen::Index r = 0; r < dm.rows(); ++r) {
      a.diagnostics.push_back({static_cast<int>(dm(r, 0)), dm(r, 1), static_cast<int>(dm(r, 2)),
                               dm(r, 3), dm(r, 4), dm(r, 5), dm(r, 6)});
    }
  } catch (const ValidationError& e) {
    throw DataError("archive: invalid prior: " + std::string(e.what()));
  } catch (const std::logic_error& e) {
    throw DataError("archive: malformed value: " + std::string(e.what()));
  }
  return a;
}

}  // namespace iwmm
