#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "mixmarket/mixture.hpp"

namespace mixmarket {

// Evaluation grid for switch budgets, serialized as {lo, hi, count}. For
// binary LMSR mixtures the grid lives in the reduced coordinate x = q_1 - q_2.
struct GridSpec {
  double lo = -140.0;
  double hi = 140.0;
  int count = 5001;

  void validate() const {
    if (count < 1) throw std::invalid_argument("GridSpec: empty grid");
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw std::invalid_argument("GridSpec: invalid range");
  }

  double point(int i) const {
    return count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
  }
};

enum class FeeVariant { global_grid, restricted, pathwise };

struct FeePolicy {
  FeeVariant variant = FeeVariant::global_grid;
  GridSpec grid{};
  std::vector<Vec> region;  // explicit states for the restricted variant
};

// Cached grid evaluator for the global switch budget of a binary LMSR
// mixture. By translation invariance the supremum over R^2 reduces to the
// one-dimensional slice q = (x, 0); expert costs on the grid are precomputed
// so each fee evaluation costs O(count * M).
class FeeGrid {
 public:
  FeeGrid(const MixtureSpec& spec, GridSpec grid) : beta_(spec.beta), grid_(grid) {
    grid_.validate();
    const auto& m = spec.market();
    if (m.kind != MarketKind::arrow_debreu || m.dim != 2)
      throw std::invalid_argument("FeeGrid: grid reduction needs a binary LMSR mixture");
    for (const auto& ex : spec.experts)
      if (ex.kind() != CostKind::lmsr)
        throw std::invalid_argument("FeeGrid: grid reduction needs a binary LMSR mixture");

    const int n = grid_.count;
    const int M = spec.num_experts();
    scaled_exp_.resize(n, M);
    Vec q(2);
    for (int i = 0; i < n; ++i) {
      q << grid_.point(i), 0.0;
      Vec t = beta_ * spec.expert_costs(q);
      const double mx = t.maxCoeff();
      for (int k = 0; k < M; ++k) scaled_exp_(i, k) = std::exp(t[k] - mx);
    }
  }

  // [max_x (C(x; w_old) - C(x; w_new))]_+ over the grid.
  double fee(const Vec& w_old, const Vec& w_new) const {
    check(w_old);
    check(w_new);
    const Vec a = scaled_exp_ * w_old;
    const Vec b = scaled_exp_ * w_new;
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < a.size(); ++i)
      worst = std::max(worst, std::log(a[i]) - std::log(b[i]));
    return std::max(worst / beta_, 0.0);
  }

  const GridSpec& grid() const { return grid_; }

 private:
  void check(const Vec& w) const {
    if (w.size() != scaled_exp_.cols())
      throw std::invalid_argument("FeeGrid: weight length mismatch");
    if (!all_finite(w) || w.minCoeff() < 0.0 || w.sum() <= 0.0)
      throw std::invalid_argument("FeeGrid: invalid weights");
  }

  double beta_;
  GridSpec grid_;
  Mat scaled_exp_;  // exp(beta C_k(x_i) - max_k beta C_k(x_i))
};

// One-off global switch budget; construct a FeeGrid directly when evaluating
// many weight pairs against the same mixture.
inline double fee_global(const MixtureSpec& spec, const Vec& w_old, const Vec& w_new,
                         const GridSpec& grid) {
  return FeeGrid(spec, grid).fee(w_old, w_new);
}

// [C(q; w_old) - C(q; w_new)]_+ at the realized state only.
inline double fee_pathwise(const MixtureSpec& spec, const Vec& q, const Vec& w_old,
                           const Vec& w_new) {
  return std::max(mix_cost(spec, q, w_old) - mix_cost(spec, q, w_new), 0.0);
}

// Positive part of the largest potential decrease over an explicit state
// region; valid for any market, but only covers the states supplied.
inline double fee_restricted(const MixtureSpec& spec, const Vec& w_old, const Vec& w_new,
                             std::span<const Vec> region) {
  if (region.empty()) throw std::invalid_argument("fee_restricted: empty region");
  double worst = -std::numeric_limits<double>::infinity();
  for (const Vec& q : region)
    worst = std::max(worst, mix_cost(spec, q, w_old) - mix_cost(spec, q, w_new));
  return std::max(worst, 0.0);
}

}  // namespace mixmarket
