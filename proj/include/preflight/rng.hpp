#pragma once

#include <cmath>
#include <cstdint>

namespace preflight {

// All randomness in the library flows through these primitives so that
// results are bit-identical across platforms and thread counts. Stream
// seeds are derived by keyed hashing, never by sharing sequential state.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_mix(uint64_t a, uint64_t b) {
  return splitmix64(a ^ (splitmix64(b) + 0x9e3779b97f4a7c15ULL));
}

inline uint64_t hash_mix(uint64_t a, uint64_t b, uint64_t c) {
  return hash_mix(hash_mix(a, b), c);
}

inline uint64_t hash_mix(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
  return hash_mix(hash_mix(a, b, c), d);
}

// Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / 1.4142135623730951);
}

// Inverse standard normal CDF: Acklam's rational approximation refined with
// one Halley step. Absolute error below 1e-13 on (0,1), well inside the
// 1e-8 accuracy the interval construction requires.
inline double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    if (p == 0.0) return -HUGE_VAL;
    if (p == 1.0) return HUGE_VAL;
    return NAN;
  }
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement.
  double e = normal_cdf(x) - p;
  double u = e * 2.5066282746310002 * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

// xoshiro256** stream generator; seeded via splitmix64 expansion.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t z = seed;
    for (auto& si : s_) {
      z = splitmix64(z);
      si = z;
    }
  }

  uint64_t next() {
    auto rotl = [](uint64_t x, int k) {
      return (x << k) | (x >> (64 - k));
    };
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in the open interval (0,1); never returns an exact endpoint so
  // it can feed the normal quantile directly.
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform()); }

  // Uniform integer in [0, n) via 128-bit multiply.
  uint64_t uniform_int(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<__uint128_t>(next()) * n) >> 64);
  }

 private:
  uint64_t s_[4];
};

// Counter-based uniform keyed by (stream, position): position-addressable,
// so parallel consumers see the same draws in any evaluation order.
inline double keyed_uniform(uint64_t stream, uint64_t counter) {
  uint64_t h = splitmix64(stream ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double keyed_normal(uint64_t stream, uint64_t counter) {
  return normal_quantile(keyed_uniform(stream, counter));
}

}  // namespace preflight
