#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mixmarket/fees.hpp"
#include "mixmarket/mixture.hpp"
#include "mixmarket/signals.hpp"

namespace mixmarket {

struct SolverOptions {
  double tol = 1e-8;   // infinity-norm price residual
  int max_iters = 200;
};

struct EngineConfig {
  FeePolicy fee_policy{};
  double weight_floor = 1e-12;
  SignalCoeffs coeffs{};
  SolverOptions solver{};
};

// One executed round; the unit of all diagnostics and regret accounting.
struct RoundRecord {
  int t = 0;
  Vec trade;
  Vec w_before;   // w_t, in force during the round
  Vec w_after;    // w_{t+1}
  Vec pi_before;  // posterior at q_{t-1} under w_t
  Vec pi_after;   // posterior at q_t under w_t
  double payment = 0.0;
  double fee = 0.0;
  RoundSignals signals;
};

struct UpsideInterval {
  double s_min = 0.0;
  double s_max = 0.0;
};

// Scan realized profit
//   payoff(o).(s v) - (C(q + s v; w) - C(q; w)) - F0 - F1 |v| s - F2 |v|^2 s^2
// over the trade sizes in s_grid and return the longest contiguous strictly
// positive run, or nothing when no grid point is profitable.
inline std::optional<UpsideInterval> upside_scan(const MixtureSpec& spec, const Vec& q,
                                                 const Vec& w, int outcome, const Vec& v,
                                                 std::span<const double> s_grid, double f0 = 0.0,
                                                 double f1 = 0.0, double f2 = 0.0) {
  const double vnorm = v.norm();
  if (vnorm <= 0.0) throw std::invalid_argument("upside_scan: direction must be nonzero");
  if (s_grid.empty()) throw std::invalid_argument("upside_scan: empty size grid");
  double prev = 0.0;
  for (double s : s_grid) {
    if (!(s > prev)) throw std::invalid_argument("upside_scan: sizes must be positive increasing");
    prev = s;
  }
  const Eigen::RowVectorXd rho = spec.market().payoff(outcome);
  const double base = mix_cost(spec, q, w);
  const double margin = rho.dot(v);

  std::optional<UpsideInterval> best;
  std::size_t run_len = 0, best_len = 0;
  double run_start = 0.0;
  double last_s = 0.0;
  for (double s : s_grid) {
    const double pay = mix_cost(spec, q + s * v, w) - base;
    const double profit = margin * s - pay - f0 - f1 * vnorm * s - f2 * vnorm * vnorm * s * s;
    if (profit > 0.0) {
      if (run_len == 0) run_start = s;
      ++run_len;
      last_s = s;
      if (run_len > best_len) {
        best_len = run_len;
        best = UpsideInterval{run_start, last_s};
      }
    } else {
      run_len = 0;
    }
  }
  return best;
}

// Worst-case loss bound of the adaptive mixture:
//   max_k B_k + (1/beta) log M + C(q0; w1) - min_o payoff(o).q0.
inline double loss_bound(const MixtureSpec& spec, const Vec& q0, const Vec& w1) {
  double b_max = -std::numeric_limits<double>::infinity();
  for (const auto& ex : spec.experts) b_max = std::max(b_max, ex.conjugate_bound());
  const double log_m = std::log(static_cast<double>(spec.num_experts())) / spec.beta;
  const double min_payout = (spec.market().payoffs * q0).minCoeff();
  return b_max + log_m + mix_cost(spec, q0, w1) - min_payout;
}

// The adaptive market state machine. Rounds follow the trading protocol:
// weights w_t are in force, a trade arrives, inventory updates, the new
// weights w_{t+1} arrive, and the payment
//   C(q_t; w_{t+1}) - C(q_{t-1}; w_t) + fee_t
// is charged, with the fee compensating worst-case potential decreases from
// the weight update. Single-writer: rounds execute strictly sequentially.
class Engine {
 public:
  Engine(MixtureSpec spec, EngineConfig cfg, Vec q0, Vec w1)
      : spec_(std::move(spec)), cfg_(std::move(cfg)), q_(std::move(q0)), w_(std::move(w1)) {
    init_();
  }

  // Starts at q = 0 with uniform weights.
  Engine(MixtureSpec spec, EngineConfig cfg) : spec_(std::move(spec)), cfg_(std::move(cfg)) {
    q_ = Vec::Zero(spec_.market().dim);
    w_ = Vec::Constant(spec_.num_experts(), 1.0 / spec_.num_experts());
    init_();
  }

  const MixtureSpec& spec() const { return spec_; }
  const EngineConfig& config() const { return cfg_; }
  const Vec& inventory() const { return q_; }
  const Vec& weights() const { return w_; }
  double fee_reserve() const { return z_; }
  int round() const { return t_; }
  bool poisoned() const { return poisoned_; }
  const std::vector<RoundRecord>& ledger() const { return ledger_; }
  const Vec& initial_inventory() const { return q0_; }
  const Vec& initial_weights() const { return w1_; }
  double payments_total() const { return payments_; }

  // Frozen-weight payment preview; no state change.
  double quote(const Vec& r) const {
    return mix_cost(spec_, q_ + r, w_) - mix_cost(spec_, q_, w_);
  }

  const RoundRecord& execute_round(const Vec& r, const Vec& w_next) {
    if (poisoned_) throw std::logic_error("Engine: state is poisoned");
    if (r.size() != spec_.market().dim)
      throw std::invalid_argument("Engine: trade dimension mismatch");
    require_simplex(w_next, "Engine");
    if (!has_full_support(w_next, cfg_.weight_floor))
      throw std::invalid_argument("Engine: invalid weights (floor violated)");

    const Vec q_next = q_ + r;
    const double fee = compute_fee(q_next, w_next);
    RoundRecord rec;
    rec.t = ++t_;
    rec.trade = r;
    rec.w_before = w_;
    rec.w_after = w_next;
    rec.pi_before = posterior(spec_, q_, w_);
    rec.pi_after = posterior(spec_, q_next, w_);
    rec.fee = fee;
    rec.payment = mix_cost(spec_, q_next, w_next) - mix_cost(spec_, q_, w_) + fee;
    rec.signals =
        compute_round_signals(spec_, q_, q_next, w_, w_next, fee, cfg_.coeffs, cfg_.weight_floor);

    if (!std::isfinite(rec.payment) || !std::isfinite(fee) || !all_finite(q_next))
      poisoned_ = true;

    q_ = q_next;
    w_ = w_next;
    z_ += fee;
    payments_ += rec.payment;
    ledger_.push_back(std::move(rec));
    return ledger_.back();
  }

  // payoff(o).(q_T - q_0) - sum of payments.
  double loss_under_outcome(int o) const {
    const Eigen::RowVectorXd rho = spec_.market().payoff(o);
    return rho.dot(q_ - q0_) - payments_;
  }

  double loss_bound() const { return mixmarket::loss_bound(spec_, q0_, w1_); }

  // Residual of the exact ledger identity
  //   sum payments = C(q_T; w_{T+1}) - C(q_0; w_1) + sum fees.
  double telescoping_gap() const {
    return payments_ - (mix_cost(spec_, q_, w_) - mix_cost(spec_, q0_, w1_) + z_);
  }

  // Profit-interval scan from the current state; F0 defaults to the fee of
  // the last executed round.
  std::optional<UpsideInterval> upside_scan(int outcome, const Vec& v,
                                            std::span<const double> s_grid) const {
    const double f0 = ledger_.empty() ? 0.0 : ledger_.back().fee;
    return mixmarket::upside_scan(spec_, q_, w_, outcome, v, s_grid, f0);
  }

  std::optional<UpsideInterval> upside_scan(int outcome, const Vec& v,
                                            std::span<const double> s_grid, double f0,
                                            double f1 = 0.0, double f2 = 0.0) const {
    return mixmarket::upside_scan(spec_, q_, w_, outcome, v, s_grid, f0, f1, f2);
  }

 private:
  void init_() {
    cfg_.coeffs.validate();
    if (q_.size() != spec_.market().dim || !all_finite(q_))
      throw std::invalid_argument("Engine: invalid initial inventory");
    require_simplex(w_, "Engine");
    if (!has_full_support(w_, cfg_.weight_floor))
      throw std::invalid_argument("Engine: invalid weights (floor violated)");
    if (cfg_.fee_policy.variant == FeeVariant::global_grid)
      grid_.emplace(spec_, cfg_.fee_policy.grid);
    q0_ = q_;
    w1_ = w_;
  }

  double compute_fee(const Vec& q_next, const Vec& w_next) const {
    switch (cfg_.fee_policy.variant) {
      case FeeVariant::global_grid:
        return grid_->fee(w_, w_next);
      case FeeVariant::restricted:
        return fee_restricted(spec_, w_, w_next, cfg_.fee_policy.region);
      case FeeVariant::pathwise:
        return fee_pathwise(spec_, q_next, w_, w_next);
    }
    throw std::logic_error("Engine: unknown fee variant");
  }

  MixtureSpec spec_;
  EngineConfig cfg_;
  Vec q_, w_, q0_, w1_;
  double z_ = 0.0;
  double payments_ = 0.0;
  int t_ = 0;
  bool poisoned_ = false;
  std::vector<RoundRecord> ledger_;
  std::optional<FeeGrid> grid_;
};

struct SolveResult {
  Vec q;
  bool converged = false;
  int iters = 0;
  double residual = 0.0;  // ||grad C(q; w) - target||_inf
};

// Invert the price map: find q with grad C(q; w) close to target by damped
// Newton on the convex objective C(q; w) - q.target, falling back to a
// gradient step when the Newton direction fails to make progress. Targets
// must lie in the relative interior of the payoff hull.
inline SolveResult solve_state_for_price(const MixtureSpec& spec, const Vec& w, const Vec& target,
                                         const SolverOptions& opts = {}) {
  const int d = spec.market().dim;
  if (target.size() != d || !all_finite(target))
    throw std::invalid_argument("solve_state_for_price: bad target dimension");
  if (spec.market().kind == MarketKind::arrow_debreu) {
    if (target.minCoeff() <= 0.0 || std::abs(target.sum() - 1.0) > 1e-9)
      throw std::invalid_argument(
          "solve_state_for_price: infeasible target (need interior simplex point)");
  } else {
    if (target.minCoeff() <= 0.0 || target.maxCoeff() >= 1.0)
      throw std::invalid_argument(
          "solve_state_for_price: infeasible target (coordinates must be in (0, 1))");
  }

  const double armijo = 1e-4;
  Vec q = Vec::Zero(d);
  double f = mix_cost(spec, q, w) - q.dot(target);
  SolveResult res;
  for (int it = 0; it < opts.max_iters; ++it) {
    const Vec grad = mix_grad(spec, q, w) - target;
    res.residual = grad.lpNorm<Eigen::Infinity>();
    res.iters = it;
    if (res.residual <= opts.tol) {
      res.converged = true;
      break;
    }
    Mat h = mix_hessian(spec, q, w);
    // Small ridge: LMSR-family Hessians are singular along the all-ones
    // direction.
    h.diagonal().array() += 1e-10 * (1.0 + h.trace());
    Vec step = -h.ldlt().solve(grad);
    if (!all_finite(step) || grad.dot(step) >= 0.0) step = -grad;

    const double slope = grad.dot(step);
    double s = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vec cand = q + s * step;
      const double fc = mix_cost(spec, cand, w) - cand.dot(target);
      if (fc <= f + armijo * s * slope) {
        q = cand;
        f = fc;
        moved = true;
        break;
      }
      s *= 0.5;
    }
    if (!moved) {
      // try a pure gradient step before giving up
      s = 1.0;
      for (int bt = 0; bt < 60 && !moved; ++bt) {
        const Vec cand = q - s * grad;
        const double fc = mix_cost(spec, cand, w) - cand.dot(target);
        if (fc < f) {
          q = cand;
          f = fc;
          moved = true;
        }
        s *= 0.5;
      }
      if (!moved) break;
    }
  }
  if (!res.converged) {
    const Vec grad = mix_grad(spec, q, w) - target;
    res.residual = grad.lpNorm<Eigen::Infinity>();
    res.converged = res.residual <= opts.tol;
  }
  res.q = q;
  return res;
}

}  // namespace mixmarket
