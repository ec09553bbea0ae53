#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mixmarket/cost_expert.hpp"
#include "mixmarket/market.hpp"

namespace mixmarket {

// A log-sum-exp mixture of cost experts:
//
//   C(q; w) = (1/beta) log sum_k w(k) exp(beta C_k(q)).
//
// Convex in q, concave in w; prices are posterior-weighted expert prices.
struct MixtureSpec {
  std::vector<CostExpert> experts;
  double beta = 1.0;

  MixtureSpec(std::vector<CostExpert> e, double b) : experts(std::move(e)), beta(b) {
    if (experts.empty()) throw std::invalid_argument("MixtureSpec: needs at least one expert");
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw std::invalid_argument("MixtureSpec: beta must be > 0");
    for (const auto& ex : experts)
      if (ex.market_ptr() != experts.front().market_ptr())
        throw std::invalid_argument("MixtureSpec: experts must share one MarketDef");
  }

  int num_experts() const { return static_cast<int>(experts.size()); }
  const MarketDef& market() const { return experts.front().market(); }
  const std::shared_ptr<const MarketDef>& market_ptr() const { return experts.front().market_ptr(); }

  Vec expert_costs(const Vec& q) const {
    Vec c(num_experts());
    for (int k = 0; k < num_experts(); ++k) c[k] = experts[k].cost(q);
    return c;
  }

  Vec scales() const {
    Vec b(num_experts());
    for (int k = 0; k < num_experts(); ++k) b[k] = experts[k].scale();
    return b;
  }
};

namespace detail {

// log w(k) + beta C_k(q); zero weights map to -inf and drop out of the mix.
inline Vec mix_logits(const MixtureSpec& spec, const Vec& q, const Vec& w) {
  if (w.size() != spec.num_experts())
    throw std::invalid_argument("mixture: weight length mismatch");
  if (!all_finite(w) || w.minCoeff() < 0.0 || w.sum() <= 0.0)
    throw std::invalid_argument("mixture: invalid weights (need nonnegative with positive mass)");
  Vec t(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k)
    t[k] = (w[k] > 0.0 ? std::log(w[k]) : -std::numeric_limits<double>::infinity()) +
           spec.beta * spec.experts[static_cast<std::size_t>(k)].cost(q);
  return t;
}

}  // namespace detail

inline double mix_cost(const MixtureSpec& spec, const Vec& q, const Vec& w) {
  return log_sum_exp(detail::mix_logits(spec, q, w)) / spec.beta;
}

// Posterior pricing weights pi_k(q; w) over experts; sums to one.
inline Vec posterior(const MixtureSpec& spec, const Vec& q, const Vec& w) {
  return softmax(detail::mix_logits(spec, q, w));
}

// grad_q C(q; w) = sum_k pi_k grad C_k(q).
inline Vec mix_grad(const MixtureSpec& spec, const Vec& q, const Vec& w) {
  const Vec pi = posterior(spec, q, w);
  Vec g = Vec::Zero(spec.market().dim);
  for (int k = 0; k < spec.num_experts(); ++k)
    if (pi[k] > 0.0) g += pi[k] * spec.experts[k].price(q);
  return g;
}

// Expected expert Hessian plus beta times the posterior covariance of expert
// gradients, the covariance taken about mix_grad (two-pass form).
inline Mat mix_hessian(const MixtureSpec& spec, const Vec& q, const Vec& w) {
  const int d = spec.market().dim;
  const Vec pi = posterior(spec, q, w);
  std::vector<Vec> grads(spec.experts.size());
  Vec gbar = Vec::Zero(d);
  for (int k = 0; k < spec.num_experts(); ++k) {
    grads[k] = spec.experts[k].price(q);
    gbar += pi[k] * grads[k];
  }
  Mat h = Mat::Zero(d, d);
  for (int k = 0; k < spec.num_experts(); ++k) {
    if (pi[k] == 0.0) continue;
    h += pi[k] * spec.experts[k].hessian(q);
    const Vec c = grads[k] - gbar;
    h += spec.beta * pi[k] * c * c.transpose();
  }
  return h;
}

// Smoothness constant L_max + beta G^2 where G bounds the expert gradient
// norms; both norms Euclidean.
inline double smoothness_constant(const MixtureSpec& spec, double grad_bound) {
  double l_max = 0.0;
  for (const auto& ex : spec.experts) l_max = std::max(l_max, ex.curvature_bound());
  return l_max + spec.beta * grad_bound * grad_bound;
}

// First-order weight-update term grad_w C(q; w_old) . (w_new - w_old). By
// concavity in w it upper-bounds the exact cost change.
inline double weight_update_bound(const MixtureSpec& spec, const Vec& q, const Vec& w_old,
                                  const Vec& w_new, double floor = 1e-12) {
  if (w_old.size() != spec.num_experts() || w_new.size() != spec.num_experts())
    throw std::invalid_argument("weight_update_bound: weight length mismatch");
  if (!has_full_support(w_old, floor) || !has_full_support(w_new, floor))
    throw std::invalid_argument("weight_update_bound: invalid weights (floor violated)");
  const Vec c = spec.expert_costs(q);
  const Vec t = spec.beta * c;
  const double m = t.maxCoeff();
  Vec a(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) a[k] = std::exp(t[k] - m);
  const double z = w_old.dot(a);
  return a.dot(w_new - w_old) / (spec.beta * z);
}

}  // namespace mixmarket
