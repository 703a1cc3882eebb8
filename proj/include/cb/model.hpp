#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cb/errors.hpp"
#include "cb/lasso.hpp"
#include "cb/matrix.hpp"
#include "cb/rng.hpp"

namespace cb {

struct Dataset {
  std::vector<double> y;
  std::shared_ptr<const DesignMatrix> X;  // null for location/circular families
  std::string meta;

  std::size_t size() const { return y.size(); }
  bool has_design() const { return static_cast<bool>(X); }
};

// One parametric family: loss evaluation, loss minimization, and forward
// simulation from P_theta. Regression simulators keep the prototype's design
// fixed and redraw only the noise. All members are pure; a constructed
// ModelSpec is safe to share across threads.
struct ModelSpec {
  std::string name;
  int param_dim = 1;
  std::function<double(const Dataset&, std::span<const double>)> loss;
  std::function<std::vector<double>(const Dataset&)> fit;
  std::function<Dataset(std::span<const double>, const Dataset&, RngStream)> simulate;
  std::function<std::vector<double>(const Dataset&, int, double)> profile_fit;

  bool has_profile() const { return static_cast<bool>(profile_fit); }
};

struct Fitted {
  std::vector<double> theta;
  double loss_value = 0.0;
};

inline Fitted fit_model(const ModelSpec& model, const Dataset& data) {
  Fitted f;
  f.theta = model.fit(data);
  f.loss_value = model.loss(data, f.theta);
  return f;
}

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// N(theta, variance) with known variance.
inline ModelSpec gaussian_mean_model(double variance) {
  if (variance <= 0.0) throw domain_error("gaussian_mean_model: variance must be positive");
  ModelSpec m;
  m.name = "gaussian_mean";
  m.param_dim = 1;
  m.loss = [variance](const Dataset& d, std::span<const double> th) {
    double s = 0.0;
    for (double yi : d.y) {
      double r = yi - th[0];
      s += r * r;
    }
    return 0.5 * s / variance;
  };
  m.fit = [](const Dataset& d) { return std::vector<double>{mean_of(d.y)}; };
  m.simulate = [variance](std::span<const double> th, const Dataset& proto, RngStream rng) {
    RngEngine eng(rng);
    Dataset out;
    out.y.resize(proto.size());
    double sd = std::sqrt(variance);
    for (auto& v : out.y) v = th[0] + sd * eng.normal();
    out.meta = "sim:" + proto.meta;
    return out;
  };
  return m;
}

namespace detail {

inline const DesignMatrix& design_of(const Dataset& d, const char* who) {
  if (!d.X) throw domain_error(std::string(who) + ": dataset has no design matrix");
  return *d.X;
}

inline double rss(const DesignMatrix& x, std::span<const double> y, std::span<const double> beta) {
  auto xb = x.apply(beta);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double r = y[i] - xb[i];
    s += r * r;
  }
  return s;
}

inline Dataset simulate_linear(std::span<const double> beta, double sigma, const Dataset& proto,
                               RngStream rng) {
  const DesignMatrix& x = design_of(proto, "simulate_linear");
  RngEngine eng(rng);
  Dataset out;
  out.X = proto.X;  // fixed design
  auto mean = x.apply(beta);
  out.y.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) out.y[i] = mean[i] + sigma * eng.normal();
  out.meta = "sim:" + proto.meta;
  return out;
}

// Least squares with one coordinate pinned: solve on the remaining columns
// against y - x_j * value, then reassemble.
inline std::vector<double> pinned_least_squares(const Dataset& d, int j, double value,
                                                const char* who) {
  const DesignMatrix& x = design_of(d, who);
  if (j < 0 || j >= x.p()) throw domain_error(std::string(who) + ": pin index out of range");
  const QrFactor& f = x.qr_dropping(j);
  if (!f.full_rank()) throw rank_error(std::string(who) + ": reduced design is rank deficient");
  std::vector<double> adj(d.y.begin(), d.y.end());
  auto cj = x.col(j);
  for (std::size_t i = 0; i < adj.size(); ++i) adj[i] -= cj[i] * value;
  auto sub = f.solve(adj);
  std::vector<double> beta(x.p());
  int c = 0;
  for (int k = 0; k < x.p(); ++k) beta[k] = (k == j) ? value : sub[c++];
  return beta;
}

}  // namespace detail

// Gaussian linear regression with known noise scale. theta = beta.
inline ModelSpec linreg_model(double sigma) {
  if (sigma <= 0.0) throw domain_error("linreg_model: sigma must be positive");
  ModelSpec m;
  m.name = "linreg_known_sigma";
  m.param_dim = 0;  // p comes from the data
  double s2 = sigma * sigma;
  m.loss = [s2](const Dataset& d, std::span<const double> th) {
    return 0.5 * detail::rss(detail::design_of(d, "linreg loss"), d.y, th) / s2;
  };
  m.fit = [](const Dataset& d) {
    return least_squares(detail::design_of(d, "linreg fit"), d.y);
  };
  m.simulate = [sigma](std::span<const double> th, const Dataset& proto, RngStream rng) {
    return detail::simulate_linear(th, sigma, proto, rng);
  };
  m.profile_fit = [](const Dataset& d, int j, double value) {
    return detail::pinned_least_squares(d, j, value, "linreg profile_fit");
  };
  return m;
}

// Gaussian linear regression, noise scale unknown. theta = (beta..., sigma^2).
inline ModelSpec linreg_model_unknown_sigma() {
  ModelSpec m;
  m.name = "linreg_unknown_sigma";
  m.param_dim = 0;
  m.loss = [](const Dataset& d, std::span<const double> th) {
    const DesignMatrix& x = detail::design_of(d, "linreg loss");
    double s2 = th.back();
    if (s2 <= 0.0) throw domain_error("linreg loss: sigma^2 must be positive");
    auto beta = th.first(th.size() - 1);
    double n = static_cast<double>(d.size());
    return 0.5 * n * std::log(2.0 * std::numbers::pi * s2) +
           0.5 * detail::rss(x, d.y, beta) / s2;
  };
  m.fit = [](const Dataset& d) {
    const DesignMatrix& x = detail::design_of(d, "linreg fit");
    auto beta = least_squares(x, d.y);
    double s2 = detail::rss(x, d.y, beta) / static_cast<double>(d.size());  // Gaussian MLE
    beta.push_back(s2);
    return beta;
  };
  m.simulate = [](std::span<const double> th, const Dataset& proto, RngStream rng) {
    auto beta = th.first(th.size() - 1);
    return detail::simulate_linear(beta, std::sqrt(th.back()), proto, rng);
  };
  m.profile_fit = [](const Dataset& d, int j, double value) {
    auto beta = detail::pinned_least_squares(d, j, value, "linreg profile_fit");
    double s2 = detail::rss(detail::design_of(d, "linreg profile_fit"), d.y, beta) /
                static_cast<double>(d.size());
    beta.push_back(s2);
    return beta;
  };
  return m;
}

// L1-penalized regression. The association loss is the penalized objective
// exactly as minimized; the fixed sigma^2 enters only the simulator's noise
// scale. `warm` seeds coordinate descent on every refit (same lambda).
inline ModelSpec lasso_model(double lambda, double sigma2, std::vector<double> warm = {}) {
  if (lambda < 0.0) throw domain_error("lasso_model: lambda must be nonnegative");
  if (sigma2 <= 0.0) throw domain_error("lasso_model: sigma^2 must be positive");
  ModelSpec m;
  m.name = "lasso";
  m.param_dim = 0;
  m.loss = [lambda](const Dataset& d, std::span<const double> th) {
    const DesignMatrix& x = detail::design_of(d, "lasso loss");
    double l1 = 0.0;
    for (double b : th) l1 += std::fabs(b);
    return 0.5 * detail::rss(x, d.y, th) + lambda * l1;
  };
  auto warm_ptr = std::make_shared<const std::vector<double>>(std::move(warm));
  m.fit = [lambda, warm_ptr](const Dataset& d) {
    const DesignMatrix& x = detail::design_of(d, "lasso fit");
    LassoOptions opt;
    if (static_cast<int>(warm_ptr->size()) == x.p()) opt.warm = *warm_ptr;
    return lasso_fit(x, d.y, lambda, opt);
  };
  double sigma = std::sqrt(sigma2);
  m.simulate = [sigma](std::span<const double> th, const Dataset& proto, RngStream rng) {
    return detail::simulate_linear(th, sigma, proto, rng);
  };
  m.profile_fit = [lambda, warm_ptr](const Dataset& d, int j, double value) {
    const DesignMatrix& x = detail::design_of(d, "lasso profile_fit");
    LassoOptions opt;
    if (static_cast<int>(warm_ptr->size()) == x.p()) opt.warm = *warm_ptr;
    opt.pin_index = j;
    opt.pin_value = value;
    return lasso_fit(x, d.y, lambda, opt);
  };
  return m;
}

// Penalized normal mean: loss = 0.5*sum (y_i - theta)^2 + lambda*|theta|,
// so the minimizer thresholds the sample mean at lambda/n.
inline ModelSpec softthresh_mean_model(double lambda) {
  if (lambda < 0.0) throw domain_error("softthresh_mean_model: lambda must be nonnegative");
  ModelSpec m;
  m.name = "softthresh_mean";
  m.param_dim = 1;
  m.loss = [lambda](const Dataset& d, std::span<const double> th) {
    double s = 0.0;
    for (double yi : d.y) {
      double r = yi - th[0];
      s += r * r;
    }
    return 0.5 * s + lambda * std::fabs(th[0]);
  };
  m.fit = [lambda](const Dataset& d) {
    double n = static_cast<double>(d.size());
    return std::vector<double>{soft_threshold(mean_of(d.y), lambda / n)};
  };
  m.simulate = [](std::span<const double> th, const Dataset& proto, RngStream rng) {
    RngEngine eng(rng);
    Dataset out;
    out.y.resize(proto.size());
    for (auto& v : out.y) v = th[0] + eng.normal();
    out.meta = "sim:" + proto.meta;
    return out;
  };
  return m;
}

// Von Mises with known concentration. theta is the mean direction in [0, 2*pi).
inline ModelSpec vonmises_model(double kappa) {
  if (kappa <= 0.0) throw domain_error("vonmises_model: kappa must be positive");
  ModelSpec m;
  m.name = "vonmises";
  m.param_dim = 1;
  m.loss = [kappa](const Dataset& d, std::span<const double> th) {
    double s = 0.0;
    for (double yi : d.y) s += std::cos(yi - th[0]);
    return -kappa * s;
  };
  m.fit = [](const Dataset& d) {
    double c = 0.0, s = 0.0;
    for (double yi : d.y) {
      c += std::cos(yi);
      s += std::sin(yi);
    }
    double r = std::hypot(c, s);
    if (r < 1e-12 * static_cast<double>(d.size()))
      throw degenerate_error("vonmises fit: zero resultant length");
    double ang = std::atan2(s, c);
    if (ang < 0.0) ang += 2.0 * std::numbers::pi;
    return std::vector<double>{ang};
  };
  m.simulate = [kappa](std::span<const double> th, const Dataset& proto, RngStream rng) {
    Dataset out;
    out.y = von_mises_sample(th[0], kappa, proto.size(), rng);
    out.meta = "sim:" + proto.meta;
    return out;
  };
  return m;
}

}  // namespace cb
