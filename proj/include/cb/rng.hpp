#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace cb {

namespace detail {

// SplitMix64 finalizer. Bijective on 64-bit words, good avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Combine a state word with an index into a fresh state word.
inline std::uint64_t mix_combine(std::uint64_t state, std::uint64_t index) {
  std::uint64_t h = state ^ mix64(index + 0x2545f4914f6cdd1dULL);
  return mix64(mix64(h) + 0x452821e638d01377ULL);
}

}  // namespace detail

// Splittable counter-based random stream. A stream is fully determined by the
// root seed and the derivation path, so any worker that derives the same path
// reproduces the same draws regardless of scheduling.
struct RngStream {
  std::uint64_t state = 0;

  static RngStream root(std::uint64_t seed) {
    return RngStream{detail::mix64(seed ^ 0x6a09e667f3bcc908ULL)};
  }

  // Pure derivation: child(i) of equal streams are equal, distinct paths
  // decorrelate through the mix.
  [[nodiscard]] RngStream child(std::uint64_t index) const {
    return RngStream{detail::mix_combine(state, index)};
  }
};

// Sequential generator over one stream. Draw k is a pure function of
// (stream, k); the engine just tracks the counter.
class RngEngine {
 public:
  explicit RngEngine(RngStream stream) : state_(stream.state) {}

  std::uint64_t next_u64() { return detail::mix_combine(state_, counter_++); }

  // Uniform on [0,1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Lemire's multiply-reject, unbiased.
  std::uint64_t uniform_below(std::uint64_t n) {
    while (true) {
      std::uint64_t x = next_u64();
      __uint128_t m = static_cast<__uint128_t>(x) * n;
      auto lo = static_cast<std::uint64_t>(m);
      if (lo < n) {
        std::uint64_t t = (0 - n) % n;
        if (lo < t) continue;
      }
      return static_cast<std::uint64_t>(m >> 64);
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal, Box-Muller with cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double exponential() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u);
  }

  // Marsaglia-Tsang for shape >= 1, boosted below 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      double u = uniform();
      while (u <= 0.0) u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_square(double df) { return 2.0 * gamma(0.5 * df); }

 private:
  std::uint64_t state_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::vector<double> normal_vector(std::size_t n, RngStream stream) {
  RngEngine eng(stream);
  std::vector<double> out(n);
  for (auto& v : out) v = eng.normal();
  return out;
}

// Multivariate t with identity scale: one chi-square denominator shared by
// every component, g / sqrt(w/df).
inline std::vector<double> student_t_vector_sample(std::size_t dim, int df, RngStream stream) {
  RngEngine eng(stream);
  std::vector<double> out(dim);
  for (auto& v : out) v = eng.normal();
  double w = eng.chi_square(static_cast<double>(df));
  double scale = 1.0 / std::sqrt(w / static_cast<double>(df));
  for (auto& v : out) v *= scale;
  return out;
}

// Best-Fisher rejection sampler via the wrapped-Cauchy envelope.
// Output angles normalized to [0, 2*pi).
inline std::vector<double> von_mises_sample(double theta, double kappa, std::size_t size,
                                            RngStream stream) {
  RngEngine eng(stream);
  const double two_pi = 2.0 * std::numbers::pi;
  double a = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  double b = (a - std::sqrt(2.0 * a)) / (2.0 * kappa);
  double r = (1.0 + b * b) / (2.0 * b);
  std::vector<double> out(size);
  for (auto& ang : out) {
    double f;
    while (true) {
      double u1 = eng.uniform();
      double z = std::cos(std::numbers::pi * u1);
      f = (1.0 + r * z) / (r + z);
      double c = kappa * (r - f);
      double u2 = eng.uniform();
      if (c * (2.0 - c) - u2 > 0.0) break;
      if (u2 > 0.0 && std::log(c / u2) + 1.0 - c >= 0.0) break;
    }
    double u3 = eng.uniform();
    double val = theta + (u3 < 0.5 ? -1.0 : 1.0) * std::acos(f);
    val = std::fmod(val, two_pi);
    if (val < 0.0) val += two_pi;
    ang = val;
  }
  return out;
}

}  // namespace cb
