#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mixmarket {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline bool all_finite(const Vec& v) {
  return v.allFinite();
}

// log(sum_i exp(x_i)) with max subtraction. Entries of -inf contribute zero
// mass; returns -inf when every entry is -inf.
inline double log_sum_exp(const Vec& x) {
  if (x.size() == 0) throw std::invalid_argument("log_sum_exp: empty input");
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) {
    if (m == -std::numeric_limits<double>::infinity()) return m;
    return m;  // +inf or nan propagates
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

// exp(x_i - lse(x)); sums to one.
inline Vec softmax(const Vec& x) {
  if (x.size() == 0) throw std::invalid_argument("softmax: empty input");
  const double m = x.maxCoeff();
  Vec e(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) e[i] = std::exp(x[i] - m);
  return e / e.sum();
}

}  // namespace mixmarket
