#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cb/calibrate.hpp"
#include "cb/errors.hpp"
#include "cb/lasso.hpp"
#include "cb/matrix.hpp"
#include "cb/model.hpp"
#include "cb/rng.hpp"

namespace cb {

using ordered_json = nlohmann::ordered_json;

// Shortest round-trip decimal text; identical doubles always print identically.
inline std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct ScenarioConfig {
  std::string scenario;
  int n = 0;
  int p = 0;
  double kappa = 0.0;
  double sigma = 1.0;
  bool sigma_known = true;
  double lambda = -1.0;  // negative = scenario default
  bool lambda_cv = false;
  std::vector<double> alpha_grid;  // empty = scenario default
  int reps = 0;                    // 0 = scenario default
  std::uint64_t seed = 0;
  bool seed_set = false;
  // RA overrides; zero means scenario default
  int ra_B = 0;
  int ra_T = 0;
  double ra_d = 0.0;
  long long ra_m_lower = 0;
  long long ra_m_upper = 0;
  int chains = 0;
  std::string out_dir = "out";
  int threads = 0;
  bool full_scale = false;
  bool emit_contour_histogram = false;
  std::string csv_path;
  double theta = 1.0;
  std::optional<double> mean_center;  // mean-simple recentering target
  int grid_points = 0;                // vonmises grid
  int contour_n = 0;                  // vonmises per-grid MC count
  int b_out = 0;                      // vonmises DR selections
  int pool_size = 0;                  // fresh pool draws per alpha
};

// Flat key=value config file; '#' starts a comment line.
inline void apply_config_line(ScenarioConfig& cfg, const std::string& key,
                              const std::string& value) {
  auto as_double = [&](const std::string& v) {
    try {
      return std::stod(v);
    } catch (...) {
      throw parse_error("config: bad numeric value for " + key);
    }
  };
  auto as_int = [&](const std::string& v) { return static_cast<int>(as_double(v)); };
  if (key == "scenario") cfg.scenario = value;
  else if (key == "n") cfg.n = as_int(value);
  else if (key == "p") cfg.p = as_int(value);
  else if (key == "kappa") cfg.kappa = as_double(value);
  else if (key == "sigma") {
    if (value == "unknown") cfg.sigma_known = false;
    else { cfg.sigma = as_double(value); cfg.sigma_known = true; }
  }
  else if (key == "lambda") {
    if (value == "cv") cfg.lambda_cv = true;
    else cfg.lambda = as_double(value);
  }
  else if (key == "alpha") {
    cfg.alpha_grid.clear();
    std::stringstream ss(value);
    std::string tok;
    while (std::getline(ss, tok, ',')) if (!tok.empty()) cfg.alpha_grid.push_back(std::stod(tok));
  }
  else if (key == "reps") cfg.reps = as_int(value);
  else if (key == "seed") { cfg.seed = static_cast<std::uint64_t>(std::stoull(value)); cfg.seed_set = true; }
  else if (key == "ra_B") cfg.ra_B = as_int(value);
  else if (key == "ra_T") cfg.ra_T = as_int(value);
  else if (key == "ra_d") cfg.ra_d = as_double(value);
  else if (key == "ra_m_lower") cfg.ra_m_lower = static_cast<long long>(as_double(value));
  else if (key == "ra_m_upper") cfg.ra_m_upper = static_cast<long long>(as_double(value));
  else if (key == "chains") cfg.chains = as_int(value);
  else if (key == "out") cfg.out_dir = value;
  else if (key == "threads") cfg.threads = as_int(value);
  else if (key == "full_scale") cfg.full_scale = (value == "1" || value == "true");
  else if (key == "emit_contour_histogram") cfg.emit_contour_histogram = (value == "1" || value == "true");
  else if (key == "csv") cfg.csv_path = value;
  else if (key == "theta") cfg.theta = as_double(value);
  else if (key == "mean_center") {
    if (value == "none") cfg.mean_center.reset();
    else cfg.mean_center = as_double(value);
  }
  else if (key == "grid_points") cfg.grid_points = as_int(value);
  else if (key == "contour_n") cfg.contour_n = as_int(value);
  else if (key == "b_out") cfg.b_out = as_int(value);
  else if (key == "pool_size") cfg.pool_size = as_int(value);
  else throw parse_error("config: unknown key '" + key + "'");
}

inline void load_config_file(ScenarioConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto h = line.find('#');
    if (h != std::string::npos) line = line.substr(0, h);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (blank) continue;
      throw parse_error("config: line " + std::to_string(lineno) + " is not key=value");
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

struct CsvSchema {
  std::vector<std::string> columns;  // expected header, in order
  std::string response;              // one of the columns
};

struct IngestResult {
  Dataset data;
  std::vector<std::string> feature_names;
};

// Parse a numeric CSV and standardize per the real-data recipe:
// sum x_ij = 0, (1/n) sum x_ij^2 = 1 per column, response centered.
inline IngestResult ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw parse_error("ingest_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw parse_error("ingest_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) header.push_back(tok);
  }
  if (header != schema.columns) throw parse_error("ingest_csv: header does not match schema");
  int resp_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == schema.response) resp_col = static_cast<int>(j);
  if (resp_col < 0) throw parse_error("ingest_csv: response column missing from schema");

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    int col = 0;
    while (std::getline(ss, tok, ',')) {
      ++col;
      const char* b = tok.data();
      const char* e = b + tok.size();
      while (b < e && (*b == ' ' || *b == '\t')) ++b;
      while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
      double v;
      auto res = std::from_chars(b, e, v);
      if (res.ec != std::errc() || res.ptr != e)
        throw parse_error("ingest_csv: non-numeric cell at row " + std::to_string(lineno) +
                          ", column " + std::to_string(col) + " ('" + tok + "')");
      row.push_back(v);
    }
    if (row.size() != header.size())
      throw parse_error("ingest_csv: row " + std::to_string(lineno) + " has " +
                        std::to_string(row.size()) + " cells, expected " +
                        std::to_string(header.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw parse_error("ingest_csv: no data rows in " + path);

  const int n = static_cast<int>(rows.size());
  const int p = static_cast<int>(header.size()) - 1;
  auto x = std::make_shared<DesignMatrix>(n, p);
  IngestResult out;
  out.data.y.resize(n);
  int c = 0;
  for (int j = 0; j < static_cast<int>(header.size()); ++j) {
    if (j == resp_col) continue;
    out.feature_names.push_back(header[j]);
    for (int i = 0; i < n; ++i) x->at(i, c) = rows[i][j];
    ++c;
  }
  for (int i = 0; i < n; ++i) out.data.y[i] = rows[i][resp_col];
  standardize_columns(*x, Standardize::RootMeanSquare);
  double ybar = mean_of(out.data.y);
  for (auto& v : out.data.y) v -= ybar;
  out.data.X = std::move(x);
  out.data.meta = path;
  return out;
}

// Mean held-out squared error per lambda over deterministic folds; returns the
// grid value with the smallest CV error (first on ties).
inline double cv_lambda(const DesignMatrix& x, std::span<const double> y, int folds,
                        std::span<const double> grid, RngStream stream) {
  if (folds < 2) throw domain_error("cv_lambda: need at least 2 folds");
  if (grid.empty()) throw domain_error("cv_lambda: empty grid");
  const int n = x.n(), p = x.p();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  RngEngine eng(stream);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[eng.uniform_below(static_cast<std::uint64_t>(i + 1))]);

  double best_err = std::numeric_limits<double>::infinity();
  double best_lambda = grid[0];
  std::vector<double> cv_err(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<int> test_idx, train_idx;
    for (int i = 0; i < n; ++i) (i % folds == f ? test_idx : train_idx).push_back(order[i]);
    DesignMatrix xt(static_cast<int>(train_idx.size()), p);
    std::vector<double> yt(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
      yt[i] = y[train_idx[i]];
      for (int j = 0; j < p; ++j) xt.at(static_cast<int>(i), j) = x.at(train_idx[i], j);
    }
    LassoOptions opt;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      auto beta = lasso_fit(xt, yt, grid[g], opt);
      opt.warm = beta;  // warm start down the grid
      double err = 0.0;
      for (int i : test_idx) {
        double pred = 0.0;
        for (int j = 0; j < p; ++j) pred += x.at(i, j) * beta[j];
        double r = y[i] - pred;
        err += r * r;
      }
      cv_err[g] += err / static_cast<double>(test_idx.size());
    }
  }
  // exact ties resolve to the larger penalty
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (cv_err[g] < best_err) {
      best_err = cv_err[g];
      best_lambda = grid[g];
    } else if (cv_err[g] == best_err) {
      best_lambda = std::max(best_lambda, grid[g]);
    }
  }
  return best_lambda;
}

// Quantile-quantile pairs at probabilities (i - 0.5)/K.
struct QqTable {
  std::vector<double> probs, theoretical_q, empirical_q;
};

inline QqTable make_qq(std::vector<double> sample, const std::function<double(double)>& oracle_q,
                       int K) {
  if (sample.empty()) throw domain_error("make_qq: empty sample");
  if (K < 1) throw domain_error("make_qq: K must be >= 1");
  std::sort(sample.begin(), sample.end());
  QqTable t;
  for (int i = 1; i <= K; ++i) {
    double prob = (i - 0.5) / K;
    auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(prob * static_cast<double>(sample.size()))));
    k = std::min(k, sample.size());
    t.probs.push_back(prob);
    t.theoretical_q.push_back(oracle_q(prob));
    t.empirical_q.push_back(sample[k - 1]);
  }
  return t;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
    if (!out_) throw parse_error("CsvWriter: cannot open " + path.string());
    out_ << header << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ",";
      out_ << cells[i];
    }
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

inline void emit_qq(const QqTable& t, const std::string& method,
                    const std::filesystem::path& path, bool append = false) {
  std::ofstream out;
  if (append) {
    out.open(path, std::ios::app);
  } else {
    out.open(path);
    out << "method,prob,theoretical_q,empirical_q\n";
  }
  if (!out) throw parse_error("emit_qq: cannot open " + path.string());
  for (std::size_t i = 0; i < t.probs.size(); ++i)
    out << method << "," << fmt_double(t.probs[i]) << "," << fmt_double(t.theoretical_q[i]) << ","
        << fmt_double(t.empirical_q[i]) << "\n";
}

// FNV-1a over the canonical config dump.
inline std::string config_digest(const ordered_json& j) {
  std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace cb
