#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "mixmarket/market.hpp"
#include "mixmarket/numeric.hpp"

namespace mixmarket {

enum class CostKind { lmsr, pair_betting };

// One convex cost function over a market. Both families are log-partition
// costs over the outcome list,
//
//   C(q) = scale * log sum_o exp(<payoff(o), q> / scale),
//
// which for Arrow-Debreu payoffs is the scaled LMSR (scale = b) and for
// permutation payoffs the perspective-scaled pair-betting cost (scale = eta).
// Prices, Hessians and liabilities are exact via enumeration of the outcome
// list. Immutable and thread-safe after construction.
class CostExpert {
 public:
  static CostExpert lmsr(std::shared_ptr<const MarketDef> market, double b) {
    if (!market || market->kind != MarketKind::arrow_debreu)
      throw std::invalid_argument("CostExpert::lmsr: needs an Arrow-Debreu market");
    return CostExpert(CostKind::lmsr, std::move(market), b);
  }

  static CostExpert pair_betting(std::shared_ptr<const MarketDef> market, double eta) {
    if (!market || market->kind != MarketKind::pair_betting)
      throw std::invalid_argument("CostExpert::pair_betting: needs a pair-betting market");
    return CostExpert(CostKind::pair_betting, std::move(market), eta);
  }

  CostKind kind() const { return kind_; }
  double scale() const { return scale_; }
  const MarketDef& market() const { return *market_; }
  const std::shared_ptr<const MarketDef>& market_ptr() const { return market_; }

  // C(0) = scale * log(#outcomes).
  double cost_at_zero() const { return cost_at_zero_; }

  double cost(const Vec& q) const { return scale_ * log_sum_exp(logits(q)); }

  // grad C(q); lies in the convex hull of the payoff vectors.
  Vec price(const Vec& q) const {
    const Vec p = softmax(logits(q));
    return market_->payoffs.transpose() * p;
  }

  // Exact Hessian: Cov_{o ~ p}[payoff(o)] / scale, computed two-pass about
  // the mean payoff.
  Mat hessian(const Vec& q) const {
    const Vec p = softmax(logits(q));
    const Vec mean = market_->payoffs.transpose() * p;
    Mat centered = market_->payoffs;
    centered.rowwise() -= mean.transpose();
    return centered.transpose() * p.asDiagonal() * centered / scale_;
  }

  // max_o payoff(o).q - (C(q) - C(0)): worst-case exposure from state q.
  double liability(const Vec& q) const {
    check_state(q);
    const double best = (market_->payoffs * q).maxCoeff();
    return best - (cost(q) - cost_at_zero_);
  }

  // B = max_o C*(payoff(o)), probed by a line search along q = t.payoff(o).
  // The objective t.|payoff(o)|^2 - C(t payoff(o)) increases monotonically to
  // the supremum for these costs; the search stops at t = 50*scale or once
  // increments fall below 1e-10.
  double conjugate_bound() const {
    const double t_cap = 50.0 * scale_;
    const int steps = 500;
    const double dt = t_cap / steps;
    double best = -std::numeric_limits<double>::infinity();
    for (int o = 0; o < market_->num_outcomes(); ++o) {
      const Vec rho = market_->payoffs.row(o).transpose();
      const double rho2 = rho.squaredNorm();
      double prev = -cost_at_zero_;  // value at t = 0
      best = std::max(best, prev);
      for (int i = 1; i <= steps; ++i) {
        const double t = dt * i;
        const double val = t * rho2 - cost(t * rho);
        best = std::max(best, val);
        if (std::abs(val - prev) < 1e-10) break;
        prev = val;
      }
    }
    return best;
  }

  // Uniform bound on the largest Hessian eigenvalue: 1/(2b) for LMSR,
  // n(n-1)/(2 eta) for pair betting (directional payoff variance bound).
  double curvature_bound() const {
    if (kind_ == CostKind::lmsr) return 0.5 / scale_;
    const double p = 0.5 * market_->pair_n * (market_->pair_n - 1);
    return p / scale_;
  }

  // Perspective transform eta * C(q / eta); composes multiplicatively with
  // the existing scale.
  CostExpert rescaled(double eta) const {
    if (!(eta > 0.0)) throw std::invalid_argument("CostExpert: invalid scale (must be > 0)");
    return CostExpert(kind_, market_, scale_ * eta);
  }

 private:
  CostExpert(CostKind kind, std::shared_ptr<const MarketDef> market, double scale)
      : kind_(kind), market_(std::move(market)), scale_(scale) {
    if (!(scale_ > 0.0) || !std::isfinite(scale_))
      throw std::invalid_argument("CostExpert: invalid scale (must be > 0)");
    cost_at_zero_ = scale_ * std::log(static_cast<double>(market_->num_outcomes()));
  }

  void check_state(const Vec& q) const {
    if (q.size() != market_->dim)
      throw std::invalid_argument("CostExpert: state dimension mismatch");
  }

  Vec logits(const Vec& q) const {
    check_state(q);
    return market_->payoffs * q / scale_;
  }

  CostKind kind_;
  std::shared_ptr<const MarketDef> market_;
  double scale_;
  double cost_at_zero_;
};

inline CostExpert perspective_scale(const CostExpert& base, double eta) {
  return base.rescaled(eta);
}

}  // namespace mixmarket
