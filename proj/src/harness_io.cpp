#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "explmia/harness.hpp"
#include "explmia/rng.hpp"

namespace explmia::harness {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for " + key + ": '" + value + "'");
  }
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer value for " + key + ": '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config: bad boolean value for " + key + ": '" + value + "'");
}

}  // namespace

void apply_override(ExperimentConfig& c, const std::string& key, const std::string& value) {
  c.echo[key] = value;
  if (key == "dataset") {
    if (value == "blobs") c.use_csv = false;
    else if (value == "csv") c.use_csv = true;
    else throw std::invalid_argument("config: dataset must be 'blobs' or 'csv'");
  } else if (key == "blobs.n") {
    c.blobs.n = static_cast<int>(parse_int(key, value));
  } else if (key == "blobs.d") {
    c.blobs.d = static_cast<int>(parse_int(key, value));
  } else if (key == "blobs.k") {
    c.blobs.k = static_cast<int>(parse_int(key, value));
  } else if (key == "blobs.separation") {
    c.blobs.separation = parse_double(key, value);
  } else if (key == "csv.path") {
    c.csv.path = value;
  } else if (key == "csv.label") {
    c.csv.label_column = value;
  } else if (key == "model.hidden") {
    c.hidden_sizes.clear();
    for (const auto& part : split(value, ',')) {
      if (part.empty()) continue;
      c.hidden_sizes.push_back(static_cast<int>(parse_int(key, part)));
    }
    if (c.hidden_sizes.empty()) throw std::invalid_argument("config: model.hidden needs sizes");
  } else if (key == "train.lr") {
    c.train.learning_rate = parse_double(key, value);
  } else if (key == "train.epochs") {
    c.train.epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "train.batch") {
    c.train.minibatch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "dp.enabled") {
    c.dp_enabled = parse_bool(key, value);
  } else if (key == "dp.epsilon") {
    if (value == "inf") {
      c.dp_epsilon = std::numeric_limits<double>::infinity();
    } else {
      c.dp_epsilon = parse_double(key, value);
    }
  } else if (key == "dp.sigma") {
    c.dp_sigma = parse_double(key, value);
  } else if (key == "dp.gamma") {
    c.dp_gamma = parse_double(key, value);
  } else if (key == "dp.delta") {
    c.dp_delta = parse_double(key, value);
  } else if (key == "dp.sampling_rate") {
    c.dp_sampling_rate = parse_double(key, value);
  } else if (key == "attack.methods") {
    c.methods.clear();
    for (const auto& part : split(value, ',')) c.methods.push_back(explainkit::parse_method(part));
  } else if (key == "attack.kinds") {
    c.kinds.clear();
    for (const auto& part : split(value, ',')) c.kinds.push_back(explainkit::parse_kind(part));
  } else if (key == "attack.n_shadow") {
    c.n_shadow = static_cast<int>(parse_int(key, value));
  } else if (key == "explain.ig_steps") {
    c.ig_steps = static_cast<int>(parse_int(key, value));
  } else if (key == "explain.gs_samples") {
    c.gs.n_samples = static_cast<int>(parse_int(key, value));
  } else if (key == "explain.gs_noise_std") {
    c.gs.noise_std = parse_double(key, value);
  } else if (key == "seed") {
    c.master_seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "workers") {
    c.workers = static_cast<int>(parse_int(key, value));
  } else if (key == "out") {
    c.out_dir = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " is not key = value");
    }
    apply_override(c, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  if (c.n_shadow < 2) throw std::invalid_argument("config: attack.n_shadow must be >= 2");
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

Dataset gen_synthetic_blobs(int n, int d, int k, double separation, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("gen_synthetic_blobs: n must be even, >= 2");
  if (d < 2) throw std::invalid_argument("gen_synthetic_blobs: d must be >= 2");
  if (k < 2) throw std::invalid_argument("gen_synthetic_blobs: k must be >= 2");
  if (k > d) throw std::invalid_argument("gen_synthetic_blobs: need k <= d orthogonal directions");
  if (separation < 0.0) throw std::invalid_argument("gen_synthetic_blobs: negative separation");

  // Random orthonormal directions via Gram-Schmidt on Gaussian draws.
  Rng dir_rng = Rng::derive(seed, {0x626c6f62ULL, 0});
  std::vector<std::vector<double>> dirs;
  while (static_cast<int>(dirs.size()) < k) {
    std::vector<double> v(d);
    for (double& e : v) e = dir_rng.next_normal();
    for (const auto& u : dirs) {
      double dot = 0.0;
      for (int i = 0; i < d; ++i) dot += v[i] * u[i];
      for (int i = 0; i < d; ++i) v[i] -= dot * u[i];
    }
    double norm = 0.0;
    for (double e : v) norm += e * e;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;  // retry a degenerate draw
    for (double& e : v) e /= norm;
    dirs.push_back(std::move(v));
  }
  // Orthonormal directions scaled by separation / sqrt(2) put every pair of
  // class means exactly `separation` apart.
  double scale = separation / std::sqrt(2.0);

  Dataset ds;
  ds.dim = d;
  ds.features.resize(static_cast<std::size_t>(n) * d);
  ds.labels.resize(n);
  Rng pt_rng = Rng::derive(seed, {0x626c6f62ULL, 1});
  for (int i = 0; i < n; ++i) {
    int y = i % k;
    ds.labels[i] = y;
    double* row = &ds.features[static_cast<std::size_t>(i) * d];
    for (int j = 0; j < d; ++j) row[j] = scale * dirs[y][j] + pt_rng.next_normal();
  }
  return ds;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("load_csv: empty file " + path);
  auto header = split(line, ',');
  int label_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) label_idx = static_cast<int>(i);
  }
  if (label_idx < 0) {
    throw std::invalid_argument("load_csv: missing label column '" + label_column + "'");
  }
  int d = static_cast<int>(header.size()) - 1;
  if (d < 1) throw std::invalid_argument("load_csv: no feature columns");

  Dataset ds;
  ds.dim = d;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw std::invalid_argument("load_csv: row " + std::to_string(row_no) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v;
      try {
        std::size_t pos = 0;
        v = std::stod(cells[c], &pos);
        if (pos != cells[c].size()) throw std::invalid_argument("junk");
      } catch (const std::exception&) {
        throw std::invalid_argument("load_csv: non-numeric cell at row " + std::to_string(row_no) +
                                    ", column " + std::to_string(c + 1));
      }
      if (static_cast<int>(c) == label_idx) {
        double r = std::round(v);
        if (std::fabs(v - r) > 1e-9 || r < 0) {
          throw std::invalid_argument("load_csv: label at row " + std::to_string(row_no) +
                                      " is not a non-negative integer");
        }
        ds.labels.push_back(static_cast<int>(r));
      } else {
        ds.features.push_back(v);
      }
    }
  }
  if (ds.labels.empty()) throw std::invalid_argument("load_csv: no data rows in " + path);

  // Standardize each feature to mean 0 / std 1; constant columns go to zero.
  std::size_t n = ds.labels.size();
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.features[i * d + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = ds.features[i * d + j] - mean;
      var += z * z;
    }
    double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      double& v = ds.features[i * d + j];
      v = sd < 1e-12 ? 0.0 : (v - mean) / sd;
    }
  }
  return ds;
}

void save_dataset_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset_csv: cannot write " + path);
  for (int j = 0; j < dataset.dim; ++j) out << "f" << j << ",";
  out << "label\n";
  char buf[40];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (int j = 0; j < dataset.dim; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", dataset.features[i * dataset.dim + j]);
      out << buf << ",";
    }
    out << dataset.labels[i] << "\n";
  }
}

namespace {

void write_matrix_header(std::ofstream& out, std::size_t n_models) {
  out << "example_id";
  for (std::size_t m = 0; m < n_models; ++m) out << ",m" << m;
  out << "\n";
}

}  // namespace

void save_matrix(const attackkit::ScoreMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_matrix: cannot write " + path);
  write_matrix_header(out, m.n_models);
  char buf[40];
  for (std::size_t i = 0; i < m.n_examples; ++i) {
    out << i;
    for (std::size_t c = 0; c < m.n_models; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m.at(i, c));
      out << "," << buf;
    }
    out << "\n";
  }
}

void save_matrix(const attackkit::MembershipMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_matrix: cannot write " + path);
  write_matrix_header(out, m.n_models);
  for (std::size_t i = 0; i < m.n_examples; ++i) {
    out << i;
    for (std::size_t c = 0; c < m.n_models; ++c) out << "," << static_cast<int>(m.at(i, c));
    out << "\n";
  }
}

namespace {

std::vector<std::vector<double>> load_matrix_rows(const std::string& path, std::size_t* n_models) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_matrix: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("load_matrix: empty file " + path);
  auto header = split(line, ',');
  if (header.empty() || header[0] != "example_id") {
    throw std::invalid_argument("load_matrix: malformed header in " + path);
  }
  *n_models = header.size() - 1;
  std::vector<std::vector<double>> rows;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw std::invalid_argument("load_matrix: malformed row " + std::to_string(row_no) + " in " +
                                  path);
    }
    std::vector<double> row(*n_models);
    for (std::size_t c = 1; c < cells.size(); ++c) row[c - 1] = std::stod(cells[c]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

attackkit::ScoreMatrix load_score_matrix(const std::string& path) {
  attackkit::ScoreMatrix m;
  auto rows = load_matrix_rows(path, &m.n_models);
  m.n_examples = rows.size();
  m.scores.reserve(m.n_examples * m.n_models);
  for (const auto& row : rows) m.scores.insert(m.scores.end(), row.begin(), row.end());
  return m;
}

attackkit::MembershipMatrix load_membership_matrix(const std::string& path) {
  attackkit::MembershipMatrix m;
  auto rows = load_matrix_rows(path, &m.n_models);
  m.n_examples = rows.size();
  m.flags.reserve(m.n_examples * m.n_models);
  for (const auto& row : rows) {
    for (double v : row) {
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("load_matrix: non-binary flag");
      m.flags.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return m;
}

}  // namespace explmia::harness
