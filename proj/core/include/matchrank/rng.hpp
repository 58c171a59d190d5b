#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "matchrank/errors.hpp"

namespace matchrank {

// Counter-based pseudo-random generator: draw i from key k is
// finalize(k + (i+1) * golden), i.e. a pure function of (key, counter).
// Streams derive hierarchically from labels, so every component of the
// pipeline owns an independent, platform-stable sequence. Distribution
// sampling uses inverse-CDF transforms of the raw uniform draws.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t hash(std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (unsigned char c : label) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
    return h;
  }

  Rng derive(std::uint64_t stream) const { return Rng(mix(key_ ^ mix(stream))); }
  Rng derive(std::string_view label) const { return derive(hash(label)); }

  std::uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1), safe for inverse-CDF transforms
  double next_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // inclusive bounds
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw ValueError("uniform_int: hi < lo");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // standard normal via Acklam's inverse-CDF approximation (|rel err| < 1.2e-9)
  double normal() {
    const double p = next_open();
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    if (p < p_low) {
      const double q = std::sqrt(-2.0 * std::log(p));
      return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
             ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
      const double q = std::sqrt(-2.0 * std::log(1.0 - p));
      return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
             ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }

  double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

  double exponential(double rate) { return -std::log(next_open()) / rate; }

  // number of failures before the first success; P(X = k) = (1-p)^k p
  std::int64_t geometric(double p) {
    if (p <= 0.0 || p > 1.0) throw ValueError("geometric: p must be in (0, 1]");
    if (p == 1.0) return 0;
    return static_cast<std::int64_t>(std::floor(std::log(next_open()) / std::log1p(-p)));
  }

  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw ValueError("categorical: weights must have positive sum");
    double u = next_double() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.empty() ? throw ValueError("categorical: empty weights") : weights.size() - 1;
  }

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace matchrank
