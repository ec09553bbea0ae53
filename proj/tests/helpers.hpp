#pragma once

#include <cmath>
#include <random>

#include "mixmarket/market.hpp"

namespace testutil {

using mixmarket::Mat;
using mixmarket::Vec;

// Deterministic draws for property tests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t bits() { return gen_(); }
  int index(int n) { return static_cast<int>(bits() % static_cast<std::uint64_t>(n)); }

  Vec vector(int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  Vec simplex(int n, double uniform_share = 0.02) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = -std::log(1.0 - uniform());
    if (v.sum() <= 0.0) return Vec::Constant(n, 1.0 / n);
    v /= v.sum();
    return (1.0 - uniform_share) * v + Vec::Constant(n, uniform_share / n);
  }

 private:
  std::mt19937_64 gen_;
};

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

}  // namespace testutil
