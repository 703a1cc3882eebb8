#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "cb/errors.hpp"
#include "cb/model.hpp"
#include "cb/parallel.hpp"
#include "cb/rng.hpp"
#include "cb/special.hpp"

namespace cb {

struct ContourValue {
  std::vector<double> theta;
  double t_value = 0.0;  // association T <= 0, a loss gap from the minimum
  double u_value = 0.0;  // estimated F_theta(T), multiple of 1/n_mc
  int n_mc = 0;
};

// Association between a dataset (with its cached fit) and a parameter value.
// The full version is the loss gap; the profile version maximizes the
// nuisance coordinates back out.
using AssocFn =
    std::function<double(const ModelSpec&, const Dataset&, const Fitted&, std::span<const double>)>;

inline double t_stat(const ModelSpec& model, const Dataset& data, const Fitted& fitted,
                     std::span<const double> theta) {
  return fitted.loss_value - model.loss(data, theta);
}

inline double t_stat(const ModelSpec& model, const Dataset& data, std::span<const double> theta) {
  return t_stat(model, data, fit_model(model, data), theta);
}

inline AssocFn assoc_full() {
  return [](const ModelSpec& m, const Dataset& d, const Fitted& f, std::span<const double> th) {
    return t_stat(m, d, f, th);
  };
}

inline double t_stat_profile(const ModelSpec& model, const Dataset& data, const Fitted& fitted,
                             int j, double value) {
  if (!model.has_profile())
    throw unsupported_error("t_stat_profile: model does not support profile fits");
  auto pinned = model.profile_fit(data, j, value);
  return fitted.loss_value - model.loss(data, pinned);
}

inline double t_stat_profile(const ModelSpec& model, const Dataset& data, int j, double value) {
  return t_stat_profile(model, data, fit_model(model, data), j, value);
}

// Profile association in coordinate j; theta_star supplies the pinned value.
inline AssocFn assoc_profile(int j) {
  return [j](const ModelSpec& m, const Dataset& d, const Fitted& f, std::span<const double> th) {
    return t_stat_profile(m, d, f, j, th[j]);
  };
}

// Monte-Carlo contour estimate of F_theta(T_{y,theta}): simulate N datasets
// from P_theta at the data's size (fixed design for regression), count
// replicates whose association falls at or below the observed one (ties
// inclusive). Replicate i draws from stream.child(i), so the estimate is
// identical for any worker count.
inline ContourValue contour_mc(const ModelSpec& model, const Dataset& data, const Fitted& fitted,
                               std::span<const double> theta, int n_mc, RngStream stream,
                               int threads = 1, const AssocFn& assoc = assoc_full()) {
  if (n_mc < 1) throw domain_error("contour_mc: need at least one replicate");
  ContourValue cv;
  cv.theta.assign(theta.begin(), theta.end());
  cv.t_value = assoc(model, data, fitted, theta);
  cv.n_mc = n_mc;
  std::vector<unsigned char> hit(n_mc, 0);
  parallel_for(static_cast<std::size_t>(n_mc), threads, [&](std::size_t i) {
    Dataset sim = model.simulate(theta, data, stream.child(i));
    Fitted fsim = fit_model(model, sim);
    double t_i = assoc(model, sim, fsim, theta);
    hit[i] = t_i <= cv.t_value ? 1 : 0;
  });
  int count = 0;
  for (unsigned char h : hit) count += h;
  cv.u_value = static_cast<double>(count) / static_cast<double>(n_mc);
  return cv;
}

inline ContourValue contour_mc(const ModelSpec& model, const Dataset& data,
                               std::span<const double> theta, int n_mc, RngStream stream,
                               int threads = 1) {
  return contour_mc(model, data, fit_model(model, data), theta, n_mc, stream, threads);
}

namespace detail {
inline double check_t_nonpositive(double t, const char* who) {
  if (t > 1e-12) throw domain_error(std::string(who) + ": t must be <= 0");
  return std::min(t, 0.0);
}
}  // namespace detail

// Gaussian mean, unit-information scaling: F_theta(t) = 2*Phi(-sqrt(-2t)).
inline double contour_exact_mean(double t) {
  t = detail::check_t_nonpositive(t, "contour_exact_mean");
  return 2.0 * norm_cdf(-std::sqrt(-2.0 * t));
}

// Known-sigma linear regression: -2T/sigma^2 ~ chi^2_p, so
// P(T <= t) = P(chi^2_p >= -2t/sigma^2).
inline double contour_exact_linreg_known_sigma(double t, int p, double sigma2) {
  t = detail::check_t_nonpositive(t, "contour_exact_linreg_known_sigma");
  if (p <= 0 || sigma2 <= 0.0)
    throw domain_error("contour_exact_linreg_known_sigma: bad p or sigma^2");
  return 1.0 - chisq_cdf(-2.0 * t / sigma2, p);
}

}  // namespace cb
