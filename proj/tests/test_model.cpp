#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cb/model.hpp"
#include "cb/rng.hpp"

using namespace cb;

namespace {

Dataset gaussian_data(int n, double theta, std::uint64_t seed) {
  RngEngine eng(RngStream::root(seed));
  Dataset d;
  d.y.resize(n);
  for (auto& v : d.y) v = theta + eng.normal();
  return d;
}

Dataset linreg_data(int n, int p, std::span<const double> beta, double sigma, std::uint64_t seed) {
  RngEngine eng(RngStream::root(seed));
  auto x = std::make_shared<DesignMatrix>(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) x->at(i, j) = eng.normal();
  Dataset d;
  d.X = x;
  d.y.resize(n);
  auto mean = x->apply(beta);
  for (int i = 0; i < n; ++i) d.y[i] = mean[i] + sigma * eng.normal();
  return d;
}

// loss at the fit beats 1000 random perturbations in a small ball
void check_minimizer(const ModelSpec& m, const Dataset& d, double radius, std::uint64_t seed) {
  auto f = fit_model(m, d);
  RngEngine eng(RngStream::root(seed));
  for (int k = 0; k < 1000; ++k) {
    auto th = f.theta;
    for (auto& v : th) v += radius * (2.0 * eng.uniform() - 1.0);
    CHECK(m.loss(d, th) >= f.loss_value - 1e-8);
  }
}

}  // namespace

TEST_CASE("gaussian mean: fit, minimum, translation") {
  auto m = gaussian_mean_model(1.0);
  Dataset d;
  d.y = {1.0, 2.0, 3.0};
  auto f = fit_model(m, d);
  CHECK(f.theta[0] == doctest::Approx(2.0).epsilon(1e-15));
  check_minimizer(m, d, 1e-3, 100);

  // translation consistency, exact for representable shifts
  Dataset shifted = d;
  for (auto& v : shifted.y) v += 4.0;
  std::vector<double> th = {0.5};
  std::vector<double> th_s = {4.5};
  CHECK(m.loss(d, th) == m.loss(shifted, th_s));
  CHECK_THROWS_AS(gaussian_mean_model(0.0), domain_error);
}

TEST_CASE("gaussian mean simulate is deterministic") {
  auto m = gaussian_mean_model(1.0);
  Dataset proto = gaussian_data(100, 0.0, 1);
  std::vector<double> th = {2.5};
  auto a = m.simulate(th, proto, RngStream::root(9).child(4));
  auto b = m.simulate(th, proto, RngStream::root(9).child(4));
  REQUIRE(a.y.size() == 100);
  for (std::size_t i = 0; i < a.y.size(); ++i) CHECK(a.y[i] == b.y[i]);
}

TEST_CASE("simulate-then-fit consistency at n = 1e5") {
  auto m = gaussian_mean_model(1.0);
  Dataset proto;
  proto.y.assign(100000, 0.0);
  std::vector<double> th = {1.0};
  int close = 0;
  for (int rep = 0; rep < 100; ++rep) {
    auto sim = m.simulate(th, proto, RngStream::root(55).child(rep));
    auto f = m.fit(sim);
    if (std::fabs(f[0] - 1.0) < 0.02) ++close;
  }
  CHECK(close >= 95);
}

TEST_CASE("linreg known sigma: recovery and minimality") {
  std::vector<double> beta = {1.0, -2.0, 0.5};
  auto d = linreg_data(60, 3, beta, 1e-8, 7);
  auto m = linreg_model(1.0);
  auto f = fit_model(m, d);
  for (int j = 0; j < 3; ++j) CHECK(f.theta[j] == doctest::Approx(beta[j]).epsilon(1e-6));
  check_minimizer(m, d, 1e-3, 101);

  // loss at the fit never exceeds loss at the generating parameter
  auto noisy = linreg_data(60, 3, beta, 1.0, 8);
  auto fn = fit_model(m, noisy);
  CHECK(fn.loss_value <= m.loss(noisy, beta));
}

TEST_CASE("linreg profile fit pins the coordinate") {
  std::vector<double> beta = {1.0, -2.0};
  auto d = linreg_data(40, 2, beta, 1.0, 9);
  auto m = linreg_model(1.0);
  auto f = fit_model(m, d);
  auto pinned = m.profile_fit(d, 1, f.theta[1]);
  for (int j = 0; j < 2; ++j) CHECK(pinned[j] == doctest::Approx(f.theta[j]).epsilon(1e-8));
  auto off = m.profile_fit(d, 0, f.theta[0] + 0.5);
  CHECK(off[0] == f.theta[0] + 0.5);
  CHECK(m.loss(d, off) >= f.loss_value);
}

TEST_CASE("linreg unknown sigma: MLE variance is RSS/n") {
  std::vector<double> beta = {2.0, 1.0};
  auto d = linreg_data(50, 2, beta, 0.7, 10);
  auto m = linreg_model_unknown_sigma();
  auto f = fit_model(m, d);
  auto bhat = least_squares(*d.X, d.y);
  auto mean = d.X->apply(bhat);
  double rss = 0.0;
  for (int i = 0; i < 50; ++i) {
    double r = d.y[i] - mean[i];
    rss += r * r;
  }
  CHECK(f.theta.back() == doctest::Approx(rss / 50.0).epsilon(1e-10));
}

TEST_CASE("lasso model reduces to linreg at lambda zero") {
  std::vector<double> beta = {1.0, 0.0, -1.0};
  auto d = linreg_data(45, 3, beta, 1.0, 11);
  auto lin = linreg_model(1.0);
  auto las = lasso_model(0.0, 1.0);
  auto fl = lin.fit(d);
  auto fa = las.fit(d);
  for (int j = 0; j < 3; ++j) CHECK(fa[j] == doctest::Approx(fl[j]).epsilon(1e-6));
}

TEST_CASE("lasso profile pinned at the optimum returns the optimum") {
  std::vector<double> beta = {2.0, 0.0, 0.0, 1.0};
  auto d = linreg_data(60, 4, beta, 1.0, 12);
  auto m = lasso_model(4.0, 1.0);
  auto f = fit_model(m, d);
  auto pinned = m.profile_fit(d, 0, f.theta[0]);
  for (int j = 0; j < 4; ++j) CHECK(pinned[j] == doctest::Approx(f.theta[j]).epsilon(1e-8));
  check_minimizer(m, d, 1e-3, 102);
}

TEST_CASE("soft-threshold mean fit cases") {
  // displayed-loss minimizer: threshold lambda/n on the sample mean
  auto m = softthresh_mean_model(0.2);
  Dataset d = gaussian_data(100, 1.0, 13);
  double ybar = mean_of(d.y);
  auto f = m.fit(d);
  CHECK(f[0] == doctest::Approx(soft_threshold(ybar, 0.002)).epsilon(1e-12));

  // estimator convention with penalty n*lambda thresholds the mean at lambda
  auto s4 = softthresh_mean_model(100.0 * 0.2);
  auto f4 = s4.fit(d);
  CHECK(f4[0] == doctest::Approx(soft_threshold(ybar, 0.2)).epsilon(1e-12));
  check_minimizer(s4, d, 1e-3, 103);

  Dataset tiny;
  tiny.y = {0.05, -0.02};
  auto mt = softthresh_mean_model(1.0);
  CHECK(mt.fit(tiny)[0] == 0.0);  // |mean| below lambda/n = 0.5

  auto m0 = softthresh_mean_model(0.0);
  CHECK(m0.fit(d)[0] == doctest::Approx(ybar).epsilon(1e-15));
}

TEST_CASE("von mises fit and degeneracy") {
  auto m = vonmises_model(2.0);
  Dataset one;
  one.y = {1.3};
  CHECK(m.fit(one)[0] == doctest::Approx(1.3).epsilon(1e-12));

  Dataset antipodal;
  antipodal.y = {0.0, std::numbers::pi};
  CHECK_THROWS_AS(m.fit(antipodal), degenerate_error);
  CHECK_THROWS_AS(vonmises_model(0.0), domain_error);
}

TEST_CASE("von mises fit minimizes the loss over random datasets") {
  auto m = vonmises_model(2.0);
  for (int rep = 0; rep < 100; ++rep) {
    Dataset d;
    d.y = von_mises_sample(1.0, 2.0, 15, RngStream::root(60).child(rep));
    auto f = fit_model(m, d);
    std::vector<double> up = {f.theta[0] + 0.1};
    std::vector<double> dn = {f.theta[0] - 0.1};
    CHECK(f.loss_value <= m.loss(d, up) + 1e-12);
    CHECK(f.loss_value <= m.loss(d, dn) + 1e-12);
  }
}
