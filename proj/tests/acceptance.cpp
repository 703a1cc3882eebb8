// Acceptance suite: runs every gate criterion end to end and prints one
// pass/fail line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cb/contour.hpp"
#include "cb/scenarios.hpp"
#include "cb/special.hpp"

using namespace cb;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& label, const std::function<bool(std::string&)>& body) {
  auto start = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s criterion %2d: %-38s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", number, label.c_str(),
              sec, detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

fs::path out_root() {
  auto p = fs::temp_directory_path() / "cb_acceptance";
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset gaussian_data(int n, double theta, std::uint64_t seed) {
  RngEngine eng(RngStream::root(seed));
  Dataset d;
  d.y.resize(n);
  for (auto& v : d.y) v = theta + eng.normal();
  return d;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    // midranks for ties
    std::size_t k = 0;
    while (k < idx.size()) {
      std::size_t j = k;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[k]]) ++j;
      double mid = 0.5 * (k + j);
      for (std::size_t t = k; t <= j; ++t) r[idx[t]] = mid;
      k = j + 1;
    }
    return r;
  };
  auto ra = ranks(a), rb = ranks(b);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= ra.size();
  mb /= rb.size();
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

// empirical P(u <= alpha) at a fixed resample size, exact-contour models
double f_hat_at_m(const ModelSpec& model, const Dataset& data, const Fitted& fitted, long long m,
                  int draws, double alpha, const std::function<double(double)>& exact_contour,
                  RngStream stream, int threads) {
  std::vector<unsigned char> hit(draws, 0);
  parallel_for(static_cast<std::size_t>(draws), threads, [&](std::size_t k) {
    Fitted star;
    try {
      star = fit_model(model, resample_m_of_n(data, m, stream.child(k).child(0)));
    } catch (const std::exception&) {
      star = fit_model(model, resample_m_of_n(data, m, stream.child(k).child(1)));
    }
    double t = std::min(0.0, t_stat(model, data, fitted, star.theta));
    hit[k] = exact_contour(t) <= alpha ? 1 : 0;
  });
  double f = 0;
  for (auto h : hit) f += h;
  return f / draws;
}

}  // namespace

int main() {
  const int threads = resolve_threads(0);
  const fs::path root = out_root();
  ordered_json lr_report;  // criterion 3's run also serves 5 and 6

  criterion(1, "simple-mean interval reproduction", [&](std::string& detail) {
    bool ok = true;
    std::ostringstream os;
    for (std::uint64_t seed : {1, 2, 3}) {
      ScenarioConfig cfg;
      cfg.scenario = "mean-simple";
      cfg.seed = seed;
      cfg.seed_set = true;
      cfg.threads = threads;
      cfg.out_dir = (root / ("c1-seed" + std::to_string(seed))).string();
      auto res = run_scenario(cfg);
      auto iv = res.report["results"]["rows"][0]["interval_loss_order"];
      double lo = iv[0].get<double>(), hi = iv[1].get<double>();
      os << " seed" << seed << "=(" << lo << "," << hi << ")";
      if (std::fabs(lo - 0.757) > 0.03 || std::fabs(hi - 1.312) > 0.03) ok = false;
    }
    detail = os.str();
    return ok;
  });

  criterion(2, "table-1 truth row oracle", [&](std::string& detail) {
    const double expected[] = {1.197, 1.120, 1.075, 1.041, 1.010,
                               0.981, 0.952, 0.920, 0.881, 0.818};
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      double alpha = 0.05 + 0.10 * i;
      double v = chisq_quantile(1.0 - alpha, 150) / 150.0;
      worst = std::max(worst, std::fabs(v - expected[i]));
    }
    detail = "max |err| = " + fmt_double(worst);
    return worst <= 0.001;
  });

  criterion(3, "lr-joint q95 vs truth and bootstrap", [&](std::string& detail) {
    ScenarioConfig cfg;
    cfg.scenario = "lr-joint";
    cfg.seed = 1;
    cfg.seed_set = true;
    cfg.threads = threads;
    cfg.out_dir = (root / "c3-lr-joint").string();
    auto res = run_scenario(cfg);
    lr_report = res.report;
    auto row = res.report["results"]["rows"][0];
    double q_cb = row["q_cb"].get<double>();
    double q_sb = row["q_standard_bootstrap"].get<double>();
    double truth = chisq_quantile(0.95, 60) / 60.0;
    double rel = std::fabs(q_cb / truth - 1.0);
    double over = q_sb / truth - 1.0;
    detail = "q_cb err " + fmt_double(rel) + ", sb over " + fmt_double(over);
    return rel <= 0.08 && over >= 0.20;
  });

  criterion(4, "contour oracle equivalence", [&](std::string& detail) {
    auto model = linreg_model(1.0);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      RngEngine eng(RngStream::root(9000 + seed));
      auto x = std::make_shared<DesignMatrix>(60, 5);
      for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 60; ++i) x->at(i, j) = eng.normal();
      Dataset d;
      d.X = x;
      d.y.resize(60);
      for (auto& v : d.y) v = eng.normal();
      Fitted f = fit_model(model, d);
      for (int k = 0; k < 50; ++k) {
        std::vector<double> th(5);
        for (int j = 0; j < 5; ++j) th[j] = f.theta[j] + 0.25 * eng.normal();
        auto cv = contour_mc(model, d, f, th, 4000, RngStream::root(9100 + seed).child(k),
                             threads);
        double exact = contour_exact_linreg_known_sigma(std::min(0.0, cv.t_value), 5, 1.0);
        worst = std::max(worst, std::fabs(cv.u_value - exact));
      }
    }
    detail = "max |mc - exact| = " + fmt_double(worst);
    return worst <= 0.06;
  });

  criterion(5, "DR uniformity and negative control", [&](std::string& detail) {
    double ks_cb = lr_report["results"]["refined_ks"].get<double>();
    auto pool_n = lr_report["results"]["refined_pool_size"].get<std::size_t>();
    ScenarioConfig cfg;
    cfg.scenario = "softthresh-mean";
    cfg.seed = 1;
    cfg.seed_set = true;
    cfg.threads = threads;
    cfg.out_dir = (root / "c5-softthresh").string();
    auto res = run_scenario(cfg);
    double ks_sb = res.report["results"]["ks_sb_pool"].get<double>();
    detail = "refined ks " + fmt_double(ks_cb) + " (pool " + std::to_string(pool_n) +
             "), sb pool ks " + fmt_double(ks_sb);
    return pool_n >= 1000 && ks_cb < 0.05 && ks_sb > 0.1;
  });

  criterion(6, "fiducial Q-Q deciles", [&](std::string& detail) {
    double max_rel = lr_report["results"]["refined_decile_max_rel_err"].get<double>();
    detail = "max decile rel err " + fmt_double(max_rel);
    return max_rel <= 0.05;
  });

  criterion(7, "lasso coverage vs bootstrap", [&](std::string& detail) {
    ScenarioConfig cfg;
    cfg.scenario = "lasso-sim";
    cfg.seed = 1;
    cfg.seed_set = true;
    cfg.reps = 200;
    cfg.threads = threads;
    cfg.out_dir = (root / "c7-lasso-sim").string();
    auto res = run_scenario(cfg);
    double cb_joint = -1, sb_joint = -1, cb_marg = -1, sb_marg = -1;
    for (const auto& row : res.report["results"]["coverage"]) {
      if (row["alpha"].get<double>() != 0.05) continue;
      std::string m = row["method"], k = row["kind"];
      double c = row["coverage"].get<double>();
      if (m == "cb" && k == "joint") cb_joint = c;
      if (m == "standard_bootstrap" && k == "joint") sb_joint = c;
      if (m == "cb" && k == "marginal") cb_marg = c;
      if (m == "standard_bootstrap" && k == "marginal") sb_marg = c;
    }
    detail = "cb joint " + fmt_double(cb_joint) + ", sb joint " + fmt_double(sb_joint) +
             ", cb marg " + fmt_double(cb_marg) + ", sb marg " + fmt_double(sb_marg);
    return cb_joint >= 0.91 && cb_joint <= 0.98 && sb_joint < 0.88 && cb_marg >= 0.90 &&
           cb_marg <= 0.98 && sb_marg < 0.70;
  });

  criterion(8, "diabetes selection and intervals", [&](std::string& detail) {
    ScenarioConfig cfg;
    cfg.scenario = "lasso-diabetes";
    cfg.threads = threads;
    cfg.out_dir = (root / "c8-diabetes").string();
    auto res = run_scenario(cfg);
    std::vector<std::string> names;
    for (const auto& v : res.report["results"]["selected"]) names.push_back(v.get<std::string>());
    std::vector<std::string> expected = {"sex", "bmi", "map", "s1", "s3", "s5", "s6"};
    bool s6_zero = false;
    bool intervals_ok = true;
    for (const auto& v : res.report["results"]["variables"]) {
      if (!v["cb"].is_array() || !v["standard_bootstrap"].is_array()) intervals_ok = false;
      if (v["name"] == "s6") s6_zero = v["cb_contains_zero"].get<bool>();
    }
    std::ostringstream os;
    for (const auto& s : names) os << s << " ";
    detail = "selected: " + os.str() + (s6_zero ? "(s6 spans 0)" : "(s6 excludes 0)");
    return names == expected && intervals_ok && s6_zero;
  });

  criterion(9, "von Mises DR against the published CDF", [&](std::string& detail) {
    ScenarioConfig cfg;
    cfg.scenario = "vonmises-dr";
    cfg.threads = threads;
    cfg.out_dir = (root / "c9-vonmises").string();
    auto res = run_scenario(cfg);
    const double expected[] = {0.361, 0.679, 0.783, 0.815, 0.845, 0.940};
    double worst = 0.0;
    for (const auto& row : res.report["results"]["cdf_table"]) {
      int t = row["theta"].get<int>();
      worst = std::max(worst, std::fabs(row["estimated"].get<double>() - expected[t - 1]));
    }
    detail = "max |err| = " + fmt_double(worst);
    return worst <= 0.03;
  });

  criterion(10, "f^alpha(m) monotonicity in m", [&](std::string& detail) {
    const double alpha = 0.3;
    std::ostringstream os;
    bool ok = true;
    {  // gaussian mean, n = 50
      auto model = gaussian_mean_model(1.0);
      auto data = gaussian_data(50, 1.0, 91);
      Fitted fitted = fit_model(model, data);
      std::vector<double> ms = {12, 20, 33, 50, 85, 140, 235, 400};
      std::vector<double> fs;
      for (double m : ms)
        fs.push_back(f_hat_at_m(model, data, fitted, static_cast<long long>(m), 500, alpha,
                                [](double t) { return contour_exact_mean(t); },
                                RngStream::root(92).child(static_cast<std::uint64_t>(m)), threads));
      double rho = spearman(ms, fs);
      os << "mean rho " << fmt_double(rho);
      ok = ok && rho <= -0.9;
    }
    {  // known-sigma regression, n = 100, p = 30
      auto model = linreg_model(1.0);
      RngEngine eng(RngStream::root(93));
      auto x = std::make_shared<DesignMatrix>(100, 30);
      for (int j = 0; j < 30; ++j)
        for (int i = 0; i < 100; ++i) x->at(i, j) = eng.normal();
      standardize_columns(*x, Standardize::SampleSd);
      Dataset data;
      data.X = x;
      data.y.resize(100);
      for (auto& v : data.y) v = eng.normal();
      Fitted fitted = fit_model(model, data);
      std::vector<double> ms = {70, 95, 130, 175, 240, 320, 435, 590};
      std::vector<double> fs;
      for (double m : ms)
        fs.push_back(f_hat_at_m(model, data, fitted, static_cast<long long>(m), 500, alpha,
                                [](double t) { return contour_exact_linreg_known_sigma(t, 30, 1.0); },
                                RngStream::root(94).child(static_cast<std::uint64_t>(m)), threads));
      double rho = spearman(ms, fs);
      os << ", lr rho " << fmt_double(rho);
      ok = ok && rho <= -0.9;
    }
    detail = os.str();
    return ok;
  });

  criterion(11, "calibration error bound diagnostic", [&](std::string& detail) {
    // Gaussian-approximation construction with unit contour scale puts the
    // calibrated size at m* = n
    double bound = calibration_error_bound(20, 10, 0.05, 20);
    detail = "bound = " + fmt_double(bound);
    return bound >= 0.005 && bound <= 0.02;
  });

  criterion(12, "byte-identical reports across thread counts", [&](std::string& detail) {
    auto run_mean = [&](int th, const std::string& tag) {
      ScenarioConfig cfg;
      cfg.scenario = "mean-simple";
      cfg.seed = 7;
      cfg.seed_set = true;
      cfg.n = 40;
      cfg.chains = 3;
      cfg.ra_B = 50;
      cfg.ra_T = 60;
      cfg.pool_size = 300;
      cfg.threads = th;
      cfg.out_dir = (root / ("c12-mean-" + tag)).string();
      run_scenario(cfg);
      return slurp(root / ("c12-mean-" + tag) / "report.json");
    };
    auto run_lr = [&](int th, const std::string& tag) {
      ScenarioConfig cfg;
      cfg.scenario = "lr-joint";
      cfg.seed = 7;
      cfg.seed_set = true;
      cfg.n = 60;
      cfg.p = 12;
      cfg.chains = 2;
      cfg.ra_B = 30;
      cfg.ra_T = 40;
      cfg.pool_size = 150;
      cfg.threads = th;
      cfg.out_dir = (root / ("c12-lr-" + tag)).string();
      run_scenario(cfg);
      return slurp(root / ("c12-lr-" + tag) / "report.json");
    };
    std::string m1 = run_mean(1, "t1"), m4 = run_mean(4, "t4"), m8 = run_mean(8, "t8");
    std::string l1 = run_lr(1, "t1"), l4 = run_lr(4, "t4"), l8 = run_lr(8, "t8");
    bool ok = !m1.empty() && m1 == m4 && m1 == m8 && !l1.empty() && l1 == l4 && l1 == l8;
    detail = ok ? "mean-simple and lr-joint reports identical for 1/4/8 threads"
                : "byte mismatch between thread counts";
    return ok;
  });

  std::printf("%d of 12 criteria passed\n", 12 - g_failures);
  return g_failures;
}
