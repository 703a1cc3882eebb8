#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cb/calibrate.hpp"
#include "cb/errors.hpp"
#include "cb/matrix.hpp"
#include "cb/model.hpp"
#include "cb/parallel.hpp"
#include "cb/refine.hpp"
#include "cb/rng.hpp"

namespace cb {

// Inverted-ECDF (type-1) quantile: k-th order statistic, k = ceil(q * B).
inline double quantile_type1(std::vector<double> values, double q) {
  if (values.empty()) throw domain_error("quantile_type1: empty sample");
  std::sort(values.begin(), values.end());
  auto b = static_cast<double>(values.size());
  auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(q * b)));
  k = std::min(k, values.size());
  return values[k - 1];
}

using ThetaStatistic = std::function<double(std::span<const double>)>;

// q_{1-alpha}: empirical (1-alpha) quantile of the statistic over the draws.
inline double joint_region_threshold(std::span<const CandidateDraw> sample,
                                     const ThetaStatistic& statistic, double alpha) {
  if (sample.empty()) throw domain_error("joint_region_threshold: empty sample");
  std::vector<double> stats;
  stats.reserve(sample.size());
  for (const auto& d : sample) stats.push_back(statistic(d.theta_star));
  return quantile_type1(std::move(stats), 1.0 - alpha);
}

inline double joint_region_threshold(const RefinedSample& sample, const ThetaStatistic& statistic,
                                     double alpha) {
  return joint_region_threshold(std::span<const CandidateDraw>(sample.draws), statistic, alpha);
}

// theta_hat_j +/- the (1-alpha) quantile of |theta*_j - theta_hat_j|.
inline std::pair<double, double> marginal_interval(std::span<const CandidateDraw> sample,
                                                   double theta_hat_j, int j, double alpha) {
  if (sample.empty()) throw domain_error("marginal_interval: empty sample");
  std::vector<double> devs;
  devs.reserve(sample.size());
  for (const auto& d : sample) devs.push_back(std::fabs(d.theta_star[j] - theta_hat_j));
  double q = quantile_type1(std::move(devs), 1.0 - alpha);
  return {theta_hat_j - q, theta_hat_j + q};
}

inline std::pair<double, double> marginal_interval(const RefinedSample& sample, double theta_hat_j,
                                                   int j, double alpha) {
  return marginal_interval(std::span<const CandidateDraw>(sample.draws), theta_hat_j, j, alpha);
}

// Range of the scalar draws whose loss falls within the lowest (1-alpha)
// quantile of pool losses.
inline std::pair<double, double> loss_order_interval(std::span<const CandidateDraw> pool,
                                                     double alpha) {
  if (pool.empty()) throw domain_error("loss_order_interval: empty pool");
  std::vector<double> losses;
  losses.reserve(pool.size());
  for (const auto& d : pool) {
    if (d.theta_star.size() != 1)
      throw domain_error("loss_order_interval: scalar-parameter pools only");
    losses.push_back(d.loss_at_data);
  }
  double cut = quantile_type1(losses, 1.0 - alpha);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& d : pool) {
    if (d.loss_at_data <= cut) {
      lo = std::min(lo, d.theta_star[0]);
      hi = std::max(hi, d.theta_star[0]);
    }
  }
  if (!(lo <= hi)) throw degenerate_error("loss_order_interval: no surviving draws");
  return {lo, hi};
}

// Alpha-quantile of the pool's contour values; the confidence region keeps
// draws with u at or above it.
inline double contour_region_threshold(std::span<const CandidateDraw> pool, double alpha) {
  if (pool.empty()) throw domain_error("contour_region_threshold: empty pool");
  std::vector<double> us;
  us.reserve(pool.size());
  for (const auto& d : pool) {
    if (!d.u_value) throw domain_error("contour_region_threshold: pool draw without contour value");
    us.push_back(*d.u_value);
  }
  return quantile_type1(std::move(us), alpha);
}

// m = n bootstrap pool, model fit per replicate. contour_B > 0 additionally
// estimates each draw's contour value with that many inner simulations.
inline std::vector<CandidateDraw> standard_bootstrap(const ModelSpec& model, const Dataset& data,
                                                     std::size_t B, RngStream stream,
                                                     int contour_B = 0, int threads = 1) {
  if (B < 1) throw domain_error("standard_bootstrap: B must be >= 1");
  Fitted fitted = fit_model(model, data);
  std::vector<CandidateDraw> pool(B);
  parallel_for(B, threads, [&](std::size_t b) {
    RngStream sb = stream.child(b);
    Fitted star;
    try {
      star = fit_model(model, resample_m_of_n(data, static_cast<long long>(data.size()), sb.child(0)));
    } catch (const std::exception&) {
      star = fit_model(model, resample_m_of_n(data, static_cast<long long>(data.size()), sb.child(1)));
    }
    CandidateDraw d;
    d.m_used = static_cast<long long>(data.size());
    d.t_value = t_stat(model, data, fitted, star.theta);
    d.loss_at_data = model.loss(data, star.theta);
    if (contour_B > 0) {
      ContourValue cv = contour_mc(model, data, fitted, star.theta, contour_B, sb.child(2));
      d.u_value = cv.u_value;
    }
    d.theta_star = std::move(star.theta);
    pool[b] = std::move(d);
  });
  return pool;
}

// Residual bootstrap: center the OLS residuals, resample them with
// replacement, rebuild responses around the OLS mean, refit with the model's
// own fit path.
inline std::vector<CandidateDraw> residual_bootstrap(const ModelSpec& model, const Dataset& data,
                                                     std::size_t B, RngStream stream,
                                                     int threads = 1) {
  if (B < 1) throw domain_error("residual_bootstrap: B must be >= 1");
  const DesignMatrix& x = detail::design_of(data, "residual_bootstrap");
  auto beta_ols = least_squares(x, data.y);
  auto mean = x.apply(beta_ols);
  const std::size_t n = data.size();
  std::vector<double> resid(n);
  double rbar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    resid[i] = data.y[i] - mean[i];
    rbar += resid[i];
  }
  rbar /= static_cast<double>(n);
  for (auto& e : resid) e -= rbar;

  Fitted fitted = fit_model(model, data);
  std::vector<CandidateDraw> pool(B);
  parallel_for(B, threads, [&](std::size_t b) {
    RngEngine eng(stream.child(b));
    Dataset boot;
    boot.X = data.X;
    boot.y.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      boot.y[i] = mean[i] + resid[eng.uniform_below(n)];
    Fitted star = fit_model(model, boot);
    CandidateDraw d;
    d.m_used = static_cast<long long>(n);
    d.t_value = t_stat(model, data, fitted, star.theta);
    d.loss_at_data = model.loss(data, star.theta);
    d.theta_star = std::move(star.theta);
    pool[b] = std::move(d);
  });
  return pool;
}

enum class ParametricNoise { Gaussian, StudentT };

// Parametric bootstrap around the OLS fit: Y* = X beta_hat + sigma_hat eps,
// eps Gaussian or multivariate-t with a shared chi-square denominator.
// known_sigma substitutes the true scale when available.
inline std::vector<CandidateDraw> parametric_bootstrap(const ModelSpec& model, const Dataset& data,
                                                       std::size_t B, ParametricNoise noise,
                                                       RngStream stream,
                                                       std::optional<double> known_sigma = {},
                                                       int threads = 1) {
  if (B < 1) throw domain_error("parametric_bootstrap: B must be >= 1");
  const DesignMatrix& x = detail::design_of(data, "parametric_bootstrap");
  const int n = x.n(), p = x.p();
  if (noise == ParametricNoise::StudentT && n <= p)
    throw domain_error("parametric_bootstrap: student-t noise needs n > p");
  auto beta_ols = least_squares(x, data.y);
  auto mean = x.apply(beta_ols);
  double sigma;
  if (known_sigma) {
    sigma = *known_sigma;
  } else {
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
      double r = data.y[i] - mean[i];
      rss += r * r;
    }
    sigma = std::sqrt(rss / static_cast<double>(n - p));
  }

  Fitted fitted = fit_model(model, data);
  std::vector<CandidateDraw> pool(B);
  parallel_for(B, threads, [&](std::size_t b) {
    RngStream sb = stream.child(b);
    std::vector<double> eps = noise == ParametricNoise::Gaussian
                                  ? normal_vector(static_cast<std::size_t>(n), sb)
                                  : student_t_vector_sample(static_cast<std::size_t>(n), n - p, sb);
    Dataset boot;
    boot.X = data.X;
    boot.y.resize(n);
    for (int i = 0; i < n; ++i) boot.y[i] = mean[i] + sigma * eps[i];
    Fitted star = fit_model(model, boot);
    CandidateDraw d;
    d.m_used = n;
    d.t_value = t_stat(model, data, fitted, star.theta);
    d.loss_at_data = model.loss(data, star.theta);
    d.theta_star = std::move(star.theta);
    pool[b] = std::move(d);
  });
  return pool;
}

// Direct draws from the exact confidence distribution of the regression
// coefficients: N_p(beta_hat, sigma^2 (X'X)^{-1}) for known sigma, the
// multivariate-t analogue otherwise. Ground truth for Q-Q checks.
inline std::vector<CandidateDraw> fiducial_oracle_sample(const Dataset& data, std::size_t B,
                                                         std::optional<double> known_sigma,
                                                         RngStream stream, int threads = 1) {
  if (B < 1) throw domain_error("fiducial_oracle_sample: B must be >= 1");
  const DesignMatrix& x = detail::design_of(data, "fiducial_oracle_sample");
  const int n = x.n(), p = x.p();
  const QrFactor& qr = x.qr();
  if (!qr.full_rank()) throw rank_error("fiducial_oracle_sample: rank-deficient design");
  auto beta_hat = qr.solve(data.y);
  double sigma_hat;
  if (known_sigma) {
    sigma_hat = *known_sigma;
  } else {
    if (n <= p) throw domain_error("fiducial_oracle_sample: unknown sigma needs n > p");
    auto mean = x.apply(beta_hat);
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
      double r = data.y[i] - mean[i];
      rss += r * r;
    }
    sigma_hat = std::sqrt(rss / static_cast<double>(n - p));
  }

  std::vector<CandidateDraw> pool(B);
  parallel_for(B, threads, [&](std::size_t b) {
    RngEngine eng(stream.child(b));
    std::vector<double> z(p);
    for (auto& v : z) v = eng.normal();
    double scale = sigma_hat;
    if (!known_sigma) scale /= std::sqrt(eng.chi_square(n - p) / static_cast<double>(n - p));
    auto w = qr.r_solve(z);
    CandidateDraw d;
    d.theta_star.resize(p);
    for (int j = 0; j < p; ++j) d.theta_star[j] = beta_hat[j] + scale * w[j];
    d.m_used = n;
    pool[b] = std::move(d);
  });
  return pool;
}

struct InferenceReport {
  std::string method;
  std::vector<double> alpha_grid;
  std::vector<double> thresholds;  // joint q_{1-alpha} per alpha
  std::vector<std::pair<double, double>> intervals;  // per alpha, one coordinate
  std::uint64_t seed = 0;
  std::string config_digest;
};

}  // namespace cb
