#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "cb/errors.hpp"
#include "cb/matrix.hpp"

namespace cb {

inline double soft_threshold(double z, double gamma) {
  if (gamma < 0.0) throw domain_error("soft_threshold: gamma must be nonnegative");
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

inline double lasso_objective(const DesignMatrix& x, std::span<const double> y,
                              std::span<const double> beta, double lambda) {
  auto xb = x.apply(beta);
  double rss = 0.0;
  for (int i = 0; i < x.n(); ++i) {
    double r = y[i] - xb[i];
    rss += r * r;
  }
  double l1 = 0.0;
  for (double b : beta) l1 += std::fabs(b);
  return 0.5 * rss + lambda * l1;
}

struct LassoOptions {
  double tol = 1e-10;       // relative objective change
  int max_sweeps = 10000;
  std::vector<double> warm; // empty = cold start at zero
  int pin_index = -1;       // coordinate held fixed at pin_value (profile fits)
  double pin_value = 0.0;
  std::function<void(int, double)> sweep_observer;  // (sweep, objective)
};

// Cyclic coordinate descent on 0.5*||y - X beta||^2 + lambda * sum |beta_j|.
inline std::vector<double> lasso_fit(const DesignMatrix& x, std::span<const double> y,
                                     double lambda, const LassoOptions& opt = {}) {
  if (lambda < 0.0) throw domain_error("lasso_fit: lambda must be nonnegative");
  if (static_cast<int>(y.size()) != x.n()) throw domain_error("lasso_fit: size mismatch");
  const int n = x.n(), p = x.p();

  std::vector<double> beta(p, 0.0);
  if (!opt.warm.empty()) beta = opt.warm;
  if (opt.pin_index >= 0) beta[opt.pin_index] = opt.pin_value;

  std::vector<double> colsq(p);
  for (int j = 0; j < p; ++j) colsq[j] = norm2_sq(x.col(j));

  std::vector<double> resid(y.begin(), y.end());
  for (int j = 0; j < p; ++j) {
    if (beta[j] == 0.0) continue;
    auto c = x.col(j);
    for (int i = 0; i < n; ++i) resid[i] -= c[i] * beta[j];
  }

  double obj = lasso_objective(x, y, beta, lambda);
  const double grad_tol = 1e-8 * std::max(1.0, lambda);
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    double max_grad_move = 0.0;  // largest gradient-scale coordinate step
    for (int j = 0; j < p; ++j) {
      if (j == opt.pin_index) continue;
      if (colsq[j] == 0.0) continue;
      auto c = x.col(j);
      double old = beta[j];
      double z = dot(c, resid) + colsq[j] * old;
      double nb = soft_threshold(z, lambda) / colsq[j];
      if (nb != old) {
        double delta = old - nb;
        max_grad_move = std::max(max_grad_move, std::fabs(delta) * colsq[j]);
        for (int i = 0; i < n; ++i) resid[i] += c[i] * delta;
        beta[j] = nb;
      }
    }
    double rss = norm2_sq(std::span<const double>(resid));
    double l1 = 0.0;
    for (double b : beta) l1 += std::fabs(b);
    double next = 0.5 * rss + lambda * l1;
    if (opt.sweep_observer) opt.sweep_observer(sweep, next);
    double denom = std::max(1.0, std::fabs(obj));
    if (obj - next <= opt.tol * denom && max_grad_move <= grad_tol) return beta;
    obj = next;
  }
  throw convergence_error("lasso_fit: no convergence within sweep budget");
}

// Max relative KKT violation; ~0 at an exact solution.
inline double lasso_kkt_violation(const DesignMatrix& x, std::span<const double> y,
                                  double lambda, std::span<const double> beta) {
  auto xb = x.apply(beta);
  std::vector<double> resid(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) resid[i] = y[i] - xb[i];
  double worst = 0.0;
  for (int j = 0; j < x.p(); ++j) {
    double g = dot(x.col(j), std::span<const double>(resid));
    if (beta[j] != 0.0) {
      double target = lambda * (beta[j] > 0.0 ? 1.0 : -1.0);
      worst = std::max(worst, std::fabs(g - target));
    } else {
      worst = std::max(worst, std::fabs(g) - lambda);
    }
  }
  return worst;
}

// Residual variance RSS / (n - s) with s the active-set size.
inline double reid_sigma2(const DesignMatrix& x, std::span<const double> y,
                          std::span<const double> beta) {
  int s = 0;
  for (double b : beta)
    if (b != 0.0) ++s;
  int n = x.n();
  if (n <= s) throw degenerate_error("reid_sigma2: n <= active set size");
  auto xb = x.apply(beta);
  double rss = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = y[i] - xb[i];
    rss += r * r;
  }
  return rss / (n - s);
}

}  // namespace cb
