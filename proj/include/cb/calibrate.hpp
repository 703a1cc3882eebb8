#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "cb/contour.hpp"
#include "cb/errors.hpp"
#include "cb/model.hpp"
#include "cb/rng.hpp"
#include "cb/special.hpp"

namespace cb {

struct RaConfig {
  double alpha = 0.05;
  int B = 10;              // inner Monte-Carlo count per iteration
  double d = 10.0;         // step constant c = d * n
  std::optional<double> c; // explicit c overrides d * n (0 freezes the walk)
  int max_iter = 100;      // T
  long long m_lower = 0;   // 0 resolves to max(p + 2, 5)
  long long m_upper = 0;   // 0 resolves to 10 * n
  double m0 = 0.0;         // 0 resolves to n
  int threads = 1;         // inner simulation parallelism

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw domain_error("RaConfig: alpha must lie in (0,1)");
    if (B < 1) throw domain_error("RaConfig: B must be >= 1");
    if (max_iter < 1) throw domain_error("RaConfig: max_iter must be >= 1");
    if (c && *c < 0.0) throw domain_error("RaConfig: c must be nonnegative");
  }
};

struct ResolvedRaConfig {
  double alpha;
  int B;
  double c;
  int max_iter;
  long long m_lower;
  long long m_upper;
  double m0;
  int threads;
};

inline ResolvedRaConfig resolve_ra_config(const RaConfig& cfg, std::size_t n, int p_dim) {
  cfg.validate();
  ResolvedRaConfig r;
  r.alpha = cfg.alpha;
  r.B = cfg.B;
  r.c = cfg.c ? *cfg.c : cfg.d * static_cast<double>(n);
  r.max_iter = cfg.max_iter;
  r.m_lower = cfg.m_lower > 0 ? cfg.m_lower : std::max<long long>(p_dim + 2, 5);
  r.m_upper = cfg.m_upper > 0 ? cfg.m_upper : 10 * static_cast<long long>(n);
  r.m0 = cfg.m0 > 0.0 ? cfg.m0 : static_cast<double>(n);
  r.threads = cfg.threads;
  if (r.m_lower > r.m_upper) throw domain_error("RaConfig: m_lower > m_upper");
  r.m0 = std::clamp(r.m0, static_cast<double>(r.m_lower), static_cast<double>(r.m_upper));
  return r;
}

struct CandidateDraw {
  std::vector<double> theta_star;
  long long m_used = 0;
  double t_value = 0.0;
  std::optional<double> u_value;
  double loss_at_data = 0.0;
};

struct TraceRow {
  int iter = 0;
  double m_real = 0.0;  // SA iterate before rounding
  long long m_int = 0;  // clipped, randomly rounded resample size
  double u_value = 0.0;
  double z = 0.0;
};

struct CalibrationTrace {
  std::vector<TraceRow> rows;
  long long m_alpha = 0;
  bool converged = false;

  // Spread of the resample size over the last quarter of the run.
  double tail_m_sd() const {
    std::size_t k = rows.size() / 4;
    if (k < 2) return 0.0;
    double mean = 0.0;
    for (std::size_t i = rows.size() - k; i < rows.size(); ++i) mean += static_cast<double>(rows[i].m_int);
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (std::size_t i = rows.size() - k; i < rows.size(); ++i) {
      double dlt = static_cast<double>(rows[i].m_int) - mean;
      ss += dlt * dlt;
    }
    return std::sqrt(ss / static_cast<double>(k - 1));
  }
};

// m rows drawn i.i.d. with replacement; paired (x_i, y_i) rows for regression.
inline Dataset resample_m_of_n(const Dataset& data, long long m, RngStream stream) {
  if (m < 1) throw domain_error("resample_m_of_n: m must be >= 1");
  if (data.size() == 0) throw domain_error("resample_m_of_n: empty dataset");
  RngEngine eng(stream);
  const std::size_t n = data.size();
  Dataset out;
  out.meta = "resample:" + data.meta;
  out.y.resize(static_cast<std::size_t>(m));
  std::vector<std::size_t> idx(static_cast<std::size_t>(m));
  for (auto& v : idx) v = static_cast<std::size_t>(eng.uniform_below(n));
  for (std::size_t i = 0; i < idx.size(); ++i) out.y[i] = data.y[idx[i]];
  if (data.X) {
    auto sub = std::make_shared<DesignMatrix>(static_cast<int>(m), data.X->p());
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (int j = 0; j < data.X->p(); ++j)
        sub->at(static_cast<int>(i), j) = data.X->at(static_cast<int>(idx[i]), j);
    out.X = std::move(sub);
  }
  return out;
}

// floor(m) + Bernoulli(frac); expectation is m itself.
inline long long randomized_round(double m_real, RngStream stream) {
  if (m_real < 0.0) throw domain_error("randomized_round: negative input");
  double fl = std::floor(m_real);
  double frac = m_real - fl;
  if (frac == 0.0) return static_cast<long long>(fl);
  RngEngine eng(stream);
  return static_cast<long long>(fl) + (eng.uniform() < frac ? 1 : 0);
}

// Clip the real iterate to [M_l, M_u], then round at random. The result is
// always a feasible resample size.
inline long long clip_and_round(double m_real, long long m_lower, long long m_upper,
                                RngStream stream) {
  if (m_real >= static_cast<double>(m_upper)) return m_upper;
  if (m_real < static_cast<double>(m_lower)) return m_lower;
  return std::clamp(randomized_round(m_real, stream), m_lower, m_upper);
}

struct RaStepResult {
  CandidateDraw draw;
  double z = 0.0;
};

// One RA iteration: resample m-of-n, fit, score the fit against the observed
// data, then estimate its contour value with B fresh simulations from the
// fitted parameter. A failed resample fit is retried once, then surfaced.
inline RaStepResult ra_step(const ModelSpec& model, const Dataset& data, const Fitted& fitted,
                            long long m, const ResolvedRaConfig& cfg, RngStream stream,
                            const AssocFn& assoc = assoc_full()) {
  Fitted star;
  try {
    star = fit_model(model, resample_m_of_n(data, m, stream.child(0)));
  } catch (const std::exception&) {
    star = fit_model(model, resample_m_of_n(data, m, stream.child(1)));
  }
  ContourValue cv = contour_mc(model, data, fitted, star.theta, cfg.B, stream.child(2),
                               cfg.threads, assoc);
  RaStepResult out;
  out.draw.theta_star = std::move(star.theta);
  out.draw.m_used = m;
  out.draw.t_value = cv.t_value;
  out.draw.u_value = cv.u_value;
  out.draw.loss_at_data = model.loss(data, out.draw.theta_star);
  double norm = std::sqrt(cfg.B * cfg.alpha * (1.0 - cfg.alpha));
  out.z = ((cv.u_value <= cfg.alpha ? 1.0 : 0.0) - cfg.alpha) / norm;
  return out;
}

struct RaResult {
  long long m_alpha = 0;
  CalibrationTrace trace;
  std::vector<CandidateDraw> pool;
};

// Resampling Approximation: the stochastic-approximation loop
// m^{t+1} = m^t + (c/(t+1)) Z_t over a fixed iteration budget, with clipping
// and randomized rounding. Returns floor(m^T) - 1 (clipped) and every
// candidate draw collected on the way.
inline RaResult ra_run(const ModelSpec& model, const Dataset& data, const RaConfig& config,
                       RngStream stream, const AssocFn& assoc = assoc_full()) {
  int p_dim = data.X ? data.X->p() : 1;
  ResolvedRaConfig cfg = resolve_ra_config(config, data.size(), p_dim);
  Fitted fitted = fit_model(model, data);

  RaResult out;
  out.pool.reserve(cfg.max_iter);
  out.trace.rows.reserve(cfg.max_iter);

  double m_real = cfg.m0;
  for (int t = 0; t < cfg.max_iter; ++t) {
    RngStream it = stream.child(static_cast<std::uint64_t>(t));
    long long m_int = clip_and_round(m_real, cfg.m_lower, cfg.m_upper, it.child(100));
    RaStepResult step = ra_step(model, data, fitted, m_int, cfg, it.child(200), assoc);
    out.trace.rows.push_back(TraceRow{t, m_real, m_int, *step.draw.u_value, step.z});
    out.pool.push_back(std::move(step.draw));
    m_real = static_cast<double>(m_int) + cfg.c / (t + 1.0) * step.z;
  }
  long long m_alpha = static_cast<long long>(std::floor(m_real)) - 1;
  out.m_alpha = std::clamp(m_alpha, cfg.m_lower, cfg.m_upper);
  out.trace.m_alpha = out.m_alpha;
  double tail = out.trace.tail_m_sd();
  out.trace.converged = tail <= 0.25 * std::max(1.0, static_cast<double>(out.m_alpha));
  return out;
}

// Convenience overload that fits the observed data itself.
inline RaStepResult ra_step(const ModelSpec& model, const Dataset& data, long long m,
                            const RaConfig& config, RngStream stream) {
  int p_dim = data.X ? data.X->p() : 1;
  ResolvedRaConfig cfg = resolve_ra_config(config, data.size(), p_dim);
  if (m < cfg.m_lower || m > cfg.m_upper) throw domain_error("ra_step: m outside [M_l, M_u]");
  return ra_step(model, data, fit_model(model, data), m, cfg, stream);
}

// Gaussian-approximation bound on the grid-discreteness error of f^alpha at
// the calibrated resample size.
inline double calibration_error_bound(int /*n*/, int p, double alpha, long long m_star) {
  if (m_star < 1) throw domain_error("calibration_error_bound: m_star must be >= 1");
  double q = chisq_quantile(1.0 - alpha, p);
  return chisq_density(q, p) * q / static_cast<double>(m_star);
}

}  // namespace cb
