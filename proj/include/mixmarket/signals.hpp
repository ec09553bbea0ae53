#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mixmarket/mixture.hpp"

namespace mixmarket {

// Slippage/liability weighting for the hybrid signal. The normalization
// scales fold into effective coefficients a/sigma_slip and b/sigma_liab;
// raw mode is scales (1, 1).
struct SignalCoeffs {
  double a = 1.0;
  double b = 1.0;
  double sigma_slip = 1.0;
  double sigma_liab = 1.0;

  void validate() const {
    if (!(a >= 0.0) || !(b >= 0.0) || !(sigma_slip > 0.0) || !(sigma_liab > 0.0))
      throw std::invalid_argument("SignalCoeffs: weights must be >= 0 and scales > 0");
  }

  double a_eff() const { return a / sigma_slip; }
  double b_eff() const { return b / sigma_liab; }
};

// Bregman divergence D_C(q_next, q_prev) >= 0: realized price-impact cost.
inline double slippage(const CostExpert& e, const Vec& q_prev, const Vec& q_next) {
  return e.cost(q_next) - e.cost(q_prev) - e.price(q_prev).dot(q_next - q_prev);
}

// The signal hierarchy evaluates the mixture over zero-anchored expert costs
// C_k - C_k(0), the normalization under which the bridge and liability-level
// inequalities hold.
// Anchoring changes nothing for a single expert, but for experts with
// different C_k(0) the anchored mixture differs from the pricing potential,
// and only the anchored one satisfies L_mix <= sum_k w(k) L_k.
namespace detail {

inline Vec anchored_logits(const MixtureSpec& spec, const Vec& q, const Vec& w) {
  if (w.size() != spec.num_experts())
    throw std::invalid_argument("mixture: weight length mismatch");
  if (!all_finite(w) || w.minCoeff() < 0.0 || w.sum() <= 0.0)
    throw std::invalid_argument("mixture: invalid weights (need nonnegative with positive mass)");
  Vec t(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const auto& e = spec.experts[static_cast<std::size_t>(k)];
    t[k] = (w[k] > 0.0 ? std::log(w[k]) : -std::numeric_limits<double>::infinity()) +
           spec.beta * (e.cost(q) - e.cost_at_zero());
  }
  return t;
}

}  // namespace detail

// (1/beta) log sum_k w(k) exp(beta (C_k(q) - C_k(0))); zero at q = 0 for
// simplex weights.
inline double anchored_mix_cost(const MixtureSpec& spec, const Vec& q, const Vec& w) {
  return log_sum_exp(detail::anchored_logits(spec, q, w)) / spec.beta;
}

inline Vec anchored_posterior(const MixtureSpec& spec, const Vec& q, const Vec& w) {
  return softmax(detail::anchored_logits(spec, q, w));
}

inline Vec anchored_mix_grad(const MixtureSpec& spec, const Vec& q, const Vec& w) {
  const Vec pi = anchored_posterior(spec, q, w);
  Vec g = Vec::Zero(spec.market().dim);
  for (int k = 0; k < spec.num_experts(); ++k)
    if (pi[k] > 0.0) g += pi[k] * spec.experts[k].price(q);
  return g;
}

inline double anchored_mixed_slippage(const MixtureSpec& spec, const Vec& q_prev,
                                      const Vec& q_next, const Vec& w) {
  return anchored_mix_cost(spec, q_next, w) - anchored_mix_cost(spec, q_prev, w) -
         anchored_mix_grad(spec, q_prev, w).dot(q_next - q_prev);
}

inline double anchored_mixed_liability(const MixtureSpec& spec, const Vec& q, const Vec& w) {
  const double best = (spec.market().payoffs * q).maxCoeff();
  const Vec zero = Vec::Zero(spec.market().dim);
  return best - (anchored_mix_cost(spec, q, w) - anchored_mix_cost(spec, zero, w));
}

inline double mixed_slippage(const MixtureSpec& spec, const Vec& q_prev, const Vec& q_next,
                             const Vec& w) {
  return mix_cost(spec, q_next, w) - mix_cost(spec, q_prev, w) -
         mix_grad(spec, q_prev, w).dot(q_next - q_prev);
}

// max_o payoff(o).q - (C(q; w) - C(0; w)) under the frozen mixture.
inline double mixed_liability(const MixtureSpec& spec, const Vec& q, const Vec& w) {
  const double best = (spec.market().payoffs * q).maxCoeff();
  const Vec zero = Vec::Zero(spec.market().dim);
  return best - (mix_cost(spec, q, w) - mix_cost(spec, zero, w));
}

// Per-expert hybrid signal: centered slippage plus uncentered liability.
inline Vec hybrid_signal(const Vec& slip, const Vec& liab, const SignalCoeffs& c) {
  c.validate();
  if (slip.size() != liab.size())
    throw std::invalid_argument("hybrid_signal: slippage/liability length mismatch");
  const double mean = slip.mean();
  return c.a_eff() * (slip.array() - mean).matrix() + c.b_eff() * liab;
}

inline double surrogate_signal(const Vec& w, const Vec& gamma_hyb) {
  if (w.size() != gamma_hyb.size())
    throw std::invalid_argument("surrogate_signal: length mismatch");
  return w.dot(gamma_hyb);
}

// Hybrid signal of the frozen anchored mixture: mixed Bregman term centered
// by the mean expert slippage, plus the anchored mixed liability.
inline double mixed_signal(const MixtureSpec& spec, const Vec& q_prev, const Vec& q_next,
                           const Vec& w, const Vec& slip, const SignalCoeffs& c) {
  c.validate();
  return c.a_eff() * (anchored_mixed_slippage(spec, q_prev, q_next, w) - slip.mean()) +
         c.b_eff() * anchored_mixed_liability(spec, q_next, w);
}

// Bridge error terms under the anchored mixture: E1 = (pi(q_next) - w) . S is
// the pricing-learning mismatch, E2 the posterior drift along the trade.
inline std::pair<double, double> bridge_errors(const MixtureSpec& spec, const Vec& q_prev,
                                               const Vec& q_next, const Vec& w, const Vec& slip,
                                               const std::vector<Vec>& grads_prev) {
  if (slip.size() != spec.num_experts() ||
      grads_prev.size() != static_cast<std::size_t>(spec.num_experts()))
    throw std::invalid_argument("bridge_errors: length mismatch");
  const Vec pi_next = anchored_posterior(spec, q_next, w);
  const Vec pi_prev = anchored_posterior(spec, q_prev, w);
  const Vec r = q_next - q_prev;
  const double e1 = (pi_next - w).dot(slip);
  double e2 = 0.0;
  for (int k = 0; k < spec.num_experts(); ++k)
    e2 += (pi_next[k] - pi_prev[k]) * grads_prev[static_cast<std::size_t>(k)].dot(r);
  return {e1, e2};
}

// Fee-and-update-adjusted signal of the implemented market.
inline double realized_signal(double gamma_mix, const MixtureSpec& spec, const Vec& q_next,
                              const Vec& w_t, const Vec& w_next, double fee,
                              const SignalCoeffs& c) {
  return gamma_mix +
         c.a_eff() * (mix_cost(spec, q_next, w_next) - mix_cost(spec, q_next, w_t)) +
         c.a_eff() * fee;
}

// ||u - v||_1 <= 2(1 - u_j) + 2(1 - v_j) for simplex points.
inline double l1_dominance_bound(const Vec& u, const Vec& v, int j) {
  require_simplex(u, "l1_dominance_bound");
  require_simplex(v, "l1_dominance_bound");
  if (j < 0 || j >= u.size() || u.size() != v.size())
    throw std::invalid_argument("l1_dominance_bound: index out of range");
  return 2.0 * (1.0 - u[j]) + 2.0 * (1.0 - v[j]);
}

// Everything the learner and the regret accounting need about one round.
// slip_mix/liab_mix are diagnostics of the pricing potential; the gamma and
// bridge-error fields live on the anchored mixture. e1/e2 are stored
// unscaled; the decomposition multiplies them by a_eff.
struct RoundSignals {
  Vec slip;        // S_k = D_{C_k}(q_t, q_{t-1})
  Vec liab;        // L_k(q_t)
  Vec gamma_hyb;   // per-expert hybrid signals
  double slip_mix = 0.0;           // Bregman of the pricing potential
  double liab_mix = 0.0;           // liability of the pricing potential
  double slip_mix_anchored = 0.0;  // Bregman of the anchored mixture
  double liab_mix_anchored = 0.0;  // liability of the anchored mixture
  double gamma_surr = 0.0;
  double gamma_mix = 0.0;
  double gamma_realized = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
  double wgrad_dot = 0.0;  // grad_w C(q_t; w_t) . (w_{t+1} - w_t)
  double fee = 0.0;
};

inline RoundSignals compute_round_signals(const MixtureSpec& spec, const Vec& q_prev,
                                          const Vec& q_next, const Vec& w_t, const Vec& w_next,
                                          double fee, const SignalCoeffs& c,
                                          double weight_floor = 1e-12) {
  c.validate();
  const int m = spec.num_experts();
  RoundSignals s;
  s.fee = fee;
  s.slip.resize(m);
  s.liab.resize(m);
  std::vector<Vec> grads_prev(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    grads_prev[static_cast<std::size_t>(k)] = spec.experts[k].price(q_prev);
    s.slip[k] = spec.experts[k].cost(q_next) - spec.experts[k].cost(q_prev) -
                grads_prev[static_cast<std::size_t>(k)].dot(q_next - q_prev);
    s.liab[k] = spec.experts[k].liability(q_next);
  }
  s.gamma_hyb = hybrid_signal(s.slip, s.liab, c);
  s.gamma_surr = surrogate_signal(w_t, s.gamma_hyb);
  s.slip_mix = mixed_slippage(spec, q_prev, q_next, w_t);
  s.liab_mix = mixed_liability(spec, q_next, w_t);
  s.slip_mix_anchored = anchored_mixed_slippage(spec, q_prev, q_next, w_t);
  s.liab_mix_anchored = anchored_mixed_liability(spec, q_next, w_t);
  s.gamma_mix =
      c.a_eff() * (s.slip_mix_anchored - s.slip.mean()) + c.b_eff() * s.liab_mix_anchored;
  std::tie(s.e1, s.e2) = bridge_errors(spec, q_prev, q_next, w_t, s.slip, grads_prev);
  s.wgrad_dot = weight_update_bound(spec, q_next, w_t, w_next, weight_floor);
  s.gamma_realized = realized_signal(s.gamma_mix, spec, q_next, w_t, w_next, fee, c);

  // Bridge inequality, gamma_mix <= gamma_surr + a(E1 + E2); holds by
  // construction, so a violation means the inputs are inconsistent.
  if (s.gamma_mix > s.gamma_surr + c.a_eff() * (s.e1 + s.e2) + 1e-9)
    throw std::logic_error("compute_round_signals: bridge inequality violated");
  return s;
}

}  // namespace mixmarket
