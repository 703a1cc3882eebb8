#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "cb/calibrate.hpp"
#include "cb/errors.hpp"
#include "cb/rng.hpp"

namespace cb {

// Two-sided Kolmogorov-Smirnov statistic against Uniform(0,1).
inline double ks_uniform(std::vector<double> us) {
  if (us.empty()) throw domain_error("ks_uniform: empty sample");
  std::sort(us.begin(), us.end());
  const double n = static_cast<double>(us.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    double hi = (static_cast<double>(i) + 1.0) / n - us[i];
    double lo = us[i] - static_cast<double>(i) / n;
    ks = std::max(ks, std::max(hi, lo));
  }
  return ks;
}

struct RefinedSample {
  std::vector<CandidateDraw> draws;
  std::vector<double> source_alphas;
  std::size_t b_out = 0;
  double ks_stat = 0.0;  // uniformity of the selected u values

  std::vector<double> u_values() const {
    std::vector<double> us;
    us.reserve(draws.size());
    for (const auto& d : draws) us.push_back(*d.u_value);
    return us;
  }
};

// Distributional Resampling: repeat B_out times, draw u ~ Uniform(0,1) and
// select the pool draw whose contour value is nearest (ties resolve to the
// lowest pool index). Selection i draws from stream.child(i), so the multiset
// is independent of evaluation order.
inline RefinedSample dr_select(std::span<const CandidateDraw> pool, std::size_t b_out,
                               RngStream stream) {
  if (pool.empty()) throw domain_error("dr_select: empty pool");
  for (const auto& d : pool)
    if (!d.u_value) throw domain_error("dr_select: pool draw without contour value");

  // Distinct u values with the smallest original index carrying each value.
  std::vector<std::pair<double, std::size_t>> keyed(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) keyed[i] = {*pool[i].u_value, i};
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::pair<double, std::size_t>> distinct;
  distinct.reserve(keyed.size());
  for (const auto& kv : keyed) {
    if (distinct.empty() || distinct.back().first != kv.first) distinct.push_back(kv);
  }

  auto nearest_index = [&](double v) -> std::size_t {
    auto it = std::lower_bound(distinct.begin(), distinct.end(), std::make_pair(v, std::size_t{0}));
    if (it == distinct.begin()) return it->second;
    if (it == distinct.end()) return std::prev(it)->second;
    auto lo = std::prev(it);
    double d_lo = v - lo->first;
    double d_hi = it->first - v;
    if (d_lo < d_hi) return lo->second;
    if (d_hi < d_lo) return it->second;
    return std::min(lo->second, it->second);
  };

  RefinedSample out;
  out.b_out = b_out;
  out.draws.reserve(b_out);
  for (std::size_t i = 0; i < b_out; ++i) {
    RngEngine eng(stream.child(i));
    out.draws.push_back(pool[nearest_index(eng.uniform())]);
  }
  out.ks_stat = ks_uniform(out.u_values());
  return out;
}

struct PipelineResult {
  RefinedSample refined;
  std::vector<double> alphas;
  std::vector<long long> m_values;             // RA output per alpha
  std::vector<CalibrationTrace> traces;
  std::vector<CandidateDraw> pool;             // union of every RA run's draws
};

// Combined RA-DR: run the calibration once per target level, pool every
// candidate draw, then refine with B_out equal to the pool size.
inline PipelineResult ra_dr_pipeline(const ModelSpec& model, const Dataset& data,
                                     std::span<const double> alpha_set, const RaConfig& config,
                                     RngStream stream, const AssocFn& assoc = assoc_full()) {
  if (alpha_set.empty()) throw domain_error("ra_dr_pipeline: empty alpha set");
  PipelineResult out;
  out.alphas.assign(alpha_set.begin(), alpha_set.end());
  for (std::size_t k = 0; k < alpha_set.size(); ++k) {
    RaConfig cfg = config;
    cfg.alpha = alpha_set[k];
    RaResult run = ra_run(model, data, cfg, stream.child(k), assoc);
    out.m_values.push_back(run.m_alpha);
    out.traces.push_back(std::move(run.trace));
    for (auto& d : run.pool) out.pool.push_back(std::move(d));
  }
  out.refined = dr_select(out.pool, out.pool.size(), stream.child(alpha_set.size()));
  out.refined.source_alphas = out.alphas;
  return out;
}

}  // namespace cb
