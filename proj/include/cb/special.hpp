#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "cb/errors.hpp"

namespace cb {

// Standard normal CDF through erfc; absolute error well below 1e-12.
inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Standard normal quantile: Acklam's rational approximation polished by two
// Newton steps against norm_cdf.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw domain_error("norm_quantile: p must lie in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int i = 0; i < 2; ++i) {
    double e = norm_cdf(x) - p;
    double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    if (density > 0.0) x -= e / density;
  }
  return x;
}

namespace detail {

// Regularized lower incomplete gamma P(a,x): series for x < a+1, Lentz
// continued fraction for the complement otherwise.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw domain_error("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

}  // namespace detail

inline double chisq_cdf(double x, int df) {
  if (df <= 0) throw domain_error("chisq_cdf: df must be positive");
  if (x < 0.0) throw domain_error("chisq_cdf: x must be nonnegative");
  return detail::gamma_p(0.5 * df, 0.5 * x);
}

inline double chisq_density(double x, int df) {
  if (df <= 0) throw domain_error("chisq_density: df must be positive");
  if (x < 0.0) throw domain_error("chisq_density: x must be nonnegative");
  if (x == 0.0) return df == 2 ? 0.5 : (df < 2 ? std::numeric_limits<double>::infinity() : 0.0);
  double a = 0.5 * df;
  return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::numbers::ln2 - std::lgamma(a));
}

// Inverse of chisq_cdf: Wilson-Hilferty start, safeguarded Newton.
inline double chisq_quantile(double p, int df) {
  if (df <= 0) throw domain_error("chisq_quantile: df must be positive");
  if (!(p > 0.0 && p < 1.0)) throw domain_error("chisq_quantile: p must lie in (0,1)");
  double nu = static_cast<double>(df);
  double z = norm_quantile(p);
  double t = 1.0 - 2.0 / (9.0 * nu) + z * std::sqrt(2.0 / (9.0 * nu));
  double x = nu * t * t * t;
  if (!(x > 0.0)) x = 0.5 * nu;
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 200; ++i) {
    double f = chisq_cdf(x, df) - p;
    if (f > 0.0) hi = x; else lo = x;
    double dens = chisq_density(x, df);
    double step = dens > 0.0 ? f / dens : 0.0;
    double xn = x - step;
    if (!(xn > lo && (xn < hi))) {
      xn = std::isinf(hi) ? (lo > 0.0 ? 2.0 * x : x + 1.0) : 0.5 * (lo + hi);
    }
    if (std::fabs(xn - x) <= 1e-13 * std::max(1.0, x) && std::fabs(f) < 1e-11) {
      x = xn;
      break;
    }
    x = xn;
  }
  return x;
}

// I1(k)/I0(k) by power series; accurate for the small concentrations used here.
inline double bessel_i_ratio(double kappa, int terms = 50) {
  if (kappa <= 0.0) throw domain_error("bessel_i_ratio: kappa must be positive");
  double q = 0.25 * kappa * kappa;
  double i0 = 0.0, i1 = 0.0, term = 1.0;
  for (int k = 0; k < terms; ++k) {
    i0 += term;
    i1 += term / (k + 1.0);
    term *= q / ((k + 1.0) * (k + 1.0));
  }
  return 0.5 * kappa * i1 / i0;
}

}  // namespace cb
