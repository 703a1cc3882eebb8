#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cb/inference.hpp"
#include "cb/model.hpp"
#include "cb/refine.hpp"

using namespace cb;

namespace {

std::vector<CandidateDraw> pool_from_us(const std::vector<double>& us) {
  std::vector<CandidateDraw> pool;
  for (std::size_t i = 0; i < us.size(); ++i) {
    CandidateDraw d;
    d.theta_star = {static_cast<double>(i)};
    d.u_value = us[i];
    pool.push_back(std::move(d));
  }
  return pool;
}

Dataset gaussian_data(int n, double theta, std::uint64_t seed) {
  RngEngine eng(RngStream::root(seed));
  Dataset d;
  d.y.resize(n);
  for (auto& v : d.y) v = theta + eng.normal();
  return d;
}

}  // namespace

TEST_CASE("ks_uniform closed forms") {
  CHECK(ks_uniform({0.5}) == doctest::Approx(0.5));
  // mid-grid (i - 0.5)/n has KS exactly 0.5/n
  std::vector<double> grid;
  const int n = 40;
  for (int i = 1; i <= n; ++i) grid.push_back((i - 0.5) / n);
  CHECK(ks_uniform(grid) == doctest::Approx(0.5 / n).epsilon(1e-12));
  CHECK(ks_uniform(std::vector<double>(25, 0.0)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(ks_uniform({}), domain_error);
}

TEST_CASE("dr_select splits evenly between two extremes") {
  auto pool = pool_from_us({0.0, 1.0});
  auto ref = dr_select(pool, 10000, RngStream::root(1));
  double ones = 0.0;
  for (const auto& d : ref.draws) ones += *d.u_value;
  CHECK(ones / 10000.0 == doctest::Approx(0.5).epsilon(0.04));  // +-0.02 absolute
}

TEST_CASE("singleton pool repeats the single draw") {
  auto pool = pool_from_us({0.42});
  auto ref = dr_select(pool, 500, RngStream::root(2));
  REQUIRE(ref.draws.size() == 500);
  for (const auto& d : ref.draws) CHECK(*d.u_value == 0.42);
}

TEST_CASE("equispaced grid pool refines to near-uniform") {
  std::vector<double> us;
  for (int i = 0; i < 100; ++i) us.push_back(0.005 + 0.01 * i);
  auto ref = dr_select(pool_from_us(us), 10000, RngStream::root(3));
  CHECK(ref.ks_stat < 0.02);
}

TEST_CASE("dr_select is deterministic and selection-order stable") {
  auto pool = pool_from_us({0.1, 0.4, 0.4, 0.9, 0.25});
  auto a = dr_select(pool, 200, RngStream::root(4));
  auto b = dr_select(pool, 200, RngStream::root(4));
  for (std::size_t i = 0; i < 200; ++i)
    CHECK(a.draws[i].theta_star[0] == b.draws[i].theta_star[0]);
  // duplicate u = 0.4 resolves to the lowest pool index (1, not 2)
  for (const auto& d : a.draws) CHECK(d.theta_star[0] != 2.0);
}

TEST_CASE("refined draws always come from the pool") {
  RngEngine eng(RngStream::root(5));
  std::vector<double> us;
  for (int i = 0; i < 37; ++i) us.push_back(eng.uniform());
  auto pool = pool_from_us(us);
  auto ref = dr_select(pool, 1000, RngStream::root(6));
  for (const auto& d : ref.draws) {
    auto idx = static_cast<std::size_t>(d.theta_star[0]);
    REQUIRE(idx < pool.size());
    CHECK(*pool[idx].u_value == *d.u_value);
  }
}

TEST_CASE("quantization-aware uniformity bound") {
  // KS < 1.63/sqrt(B_out) + max gap between adjacent pool u values
  RngEngine eng(RngStream::root(7));
  std::vector<double> us;
  for (int i = 0; i < 300; ++i) us.push_back(eng.uniform());
  std::vector<double> sorted = us;
  std::sort(sorted.begin(), sorted.end());
  double max_gap = sorted.front();
  for (std::size_t i = 1; i < sorted.size(); ++i)
    max_gap = std::max(max_gap, sorted[i] - sorted[i - 1]);
  max_gap = std::max(max_gap, 1.0 - sorted.back());
  for (std::size_t b_out : {1000u, 4000u}) {
    auto ref = dr_select(pool_from_us(us), b_out, RngStream::root(8).child(b_out));
    CHECK(ref.ks_stat < 1.63 / std::sqrt(static_cast<double>(b_out)) + max_gap);
  }
}

TEST_CASE("empty pool and missing contour values are errors") {
  std::vector<CandidateDraw> empty;
  CHECK_THROWS_AS(dr_select(empty, 10, RngStream::root(9)), domain_error);
  std::vector<CandidateDraw> no_u(1);
  no_u[0].theta_star = {0.0};
  CHECK_THROWS_AS(dr_select(no_u, 10, RngStream::root(10)), domain_error);
}

TEST_CASE("pipeline with a single alpha degrades gracefully") {
  auto m = gaussian_mean_model(1.0);
  auto d = gaussian_data(40, 1.0, 11);
  RaConfig cfg;
  cfg.B = 20;
  cfg.max_iter = 30;
  cfg.m_upper = 80;
  std::vector<double> alphas = {0.5};
  auto res = ra_dr_pipeline(m, d, alphas, cfg, RngStream::root(12));
  CHECK(res.pool.size() == 30);
  CHECK(res.refined.draws.size() == 30);
  CHECK(res.refined.source_alphas == alphas);
  CHECK(res.m_values.size() == 1);
}

TEST_CASE("standard-bootstrap pool fails uniformity on the soft-threshold scenario") {
  // theta = 1, n = 100, estimator thresholds the mean at 0.2 (penalty n*lambda)
  const int n = 100;
  auto model = softthresh_mean_model(n * 0.2);
  auto d = gaussian_data(n, 1.0, 13);
  auto pool = standard_bootstrap(model, d, 400, RngStream::root(14), 100, 4);
  std::vector<double> us;
  for (const auto& dr : pool) us.push_back(*dr.u_value);
  double ks = ks_uniform(us);
  CHECK(ks > 0.1);  // misses the low tail entirely
  CHECK(*std::min_element(us.begin(), us.end()) > 0.02);
}

TEST_CASE("ra-dr pool on the soft-threshold scenario covers both tails") {
  const int n = 100;
  auto model = softthresh_mean_model(n * 0.2);
  auto d = gaussian_data(n, 1.0, 15);
  RaConfig cfg;
  cfg.B = 100;
  cfg.max_iter = 100;
  cfg.m_upper = 2 * n;
  std::vector<double> alphas;
  for (double a = 0.05; a < 0.99; a += 0.05) alphas.push_back(a);
  auto res = ra_dr_pipeline(model, d, alphas, cfg, RngStream::root(16));
  std::vector<double> us;
  for (const auto& dr : res.pool) us.push_back(*dr.u_value);
  CHECK(*std::min_element(us.begin(), us.end()) < 0.02);
  CHECK(*std::max_element(us.begin(), us.end()) > 0.98);
  CHECK(res.refined.ks_stat < 0.1);
}
