#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cb/special.hpp"

using namespace cb;

namespace {

// Composite Simpson, independent of the library's incomplete-gamma path.
template <class F>
double simpson(F f, double a, double b, int intervals = 4000) {
  if (intervals % 2) ++intervals;
  double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double phi_density(double t) {
  return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

double phi_oracle(double x) {
  if (x < 0.0) return 1.0 - phi_oracle(-x);
  return 0.5 + simpson(phi_density, 0.0, x);
}

double chisq_density_oracle(double x, int df) {
  double a = 0.5 * df;
  return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - std::lgamma(a));
}

}  // namespace

TEST_CASE("norm_cdf basic symmetry and center") {
  CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  for (double x : {0.3, 1.0, 2.5, 4.0}) {
    CHECK(norm_cdf(-x) == doctest::Approx(1.0 - norm_cdf(x)).epsilon(1e-13));
    CHECK(norm_cdf(x) > norm_cdf(x - 0.01));
  }
}

TEST_CASE("norm_cdf against quadrature oracle") {
  // invert the oracle by bisection to recover the 0.975 quantile
  double lo = 1.0, hi = 3.0;
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (lo + hi);
    (phi_oracle(mid) < 0.975 ? lo : hi) = mid;
  }
  double z975 = 0.5 * (lo + hi);
  CHECK(z975 == doctest::Approx(1.959964).epsilon(1e-5));
  CHECK(norm_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
  CHECK(norm_cdf(-std::sqrt(2.0)) == doctest::Approx(0.078649).epsilon(1e-5));
  CHECK(norm_cdf(-std::sqrt(2.0)) == doctest::Approx(phi_oracle(-std::sqrt(2.0))).epsilon(1e-9));
}

TEST_CASE("norm_quantile inverts norm_cdf") {
  for (double p : {0.001, 0.025, 0.3, 0.5, 0.7, 0.975, 0.999}) {
    CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS_AS(norm_quantile(0.0), domain_error);
  CHECK_THROWS_AS(norm_quantile(1.0), domain_error);
}

TEST_CASE("chisq cdf endpoints and domain") {
  for (int df : {1, 2, 10, 150}) CHECK(chisq_cdf(0.0, df) == 0.0);
  CHECK_THROWS_AS(chisq_cdf(1.0, 0), domain_error);
  CHECK_THROWS_AS(chisq_cdf(-1.0, 3), domain_error);
  CHECK_THROWS_AS(chisq_quantile(0.0, 3), domain_error);
  CHECK_THROWS_AS(chisq_quantile(1.0, 3), domain_error);
  CHECK_THROWS_AS(chisq_quantile(0.5, -2), domain_error);
}

TEST_CASE("chisq quantile closed form at df=2") {
  // df=2 is exponential with rate 1/2: quantile(p) = -2 ln(1-p)
  CHECK(chisq_quantile(0.5, 2) == doctest::Approx(1.386294).epsilon(1e-6));
  CHECK(chisq_quantile(0.9, 2) == doctest::Approx(-2.0 * std::log(0.1)).epsilon(1e-9));
}

TEST_CASE("chisq cdf and quantile are inverses across df") {
  for (int df : {1, 2, 3, 5, 10, 30, 60, 150, 500}) {
    for (double p : {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99}) {
      double q = chisq_quantile(p, df);
      CHECK(chisq_cdf(q, df) == doctest::Approx(p).epsilon(1e-9));
    }
  }
}

TEST_CASE("chisq density integrates to the cdf") {
  for (int df : {3, 10, 60}) {
    double lower = chisq_quantile(0.1, df);
    double upper = chisq_quantile(0.8, df);
    double integral = simpson([df](double x) { return chisq_density_oracle(x, df); }, lower, upper);
    CHECK(chisq_cdf(upper, df) - chisq_cdf(lower, df) == doctest::Approx(integral).epsilon(1e-8));
    CHECK(chisq_density(upper, df) ==
          doctest::Approx(chisq_density_oracle(upper, df)).epsilon(1e-12));
  }
}

TEST_CASE("truth row of the n=500 kappa=0.3 table") {
  const double expected[] = {1.197, 1.120, 1.075, 1.041, 1.010,
                             0.981, 0.952, 0.920, 0.881, 0.818};
  int i = 0;
  for (double alpha = 0.05; alpha < 1.0; alpha += 0.10) {
    CHECK(chisq_quantile(1.0 - alpha, 150) / 150.0 ==
          doctest::Approx(expected[i++]).epsilon(0.001));
  }
}

TEST_CASE("bessel ratio against quadrature oracle") {
  // I_n(k) = (1/pi) int_0^pi exp(k cos t) cos(nt) dt
  auto bessel_i = [](int n, double k) {
    return simpson([n, k](double t) { return std::exp(k * std::cos(t)) * std::cos(n * t); }, 0.0,
                   std::numbers::pi) /
           std::numbers::pi;
  };
  for (double k : {0.5, 1.422, 2.0, 5.0}) {
    CHECK(bessel_i_ratio(k) == doctest::Approx(bessel_i(1, k) / bessel_i(0, k)).epsilon(1e-10));
  }
  CHECK(bessel_i_ratio(2.0) == doctest::Approx(0.698).epsilon(0.002));
}
