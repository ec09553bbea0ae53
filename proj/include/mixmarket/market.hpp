#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixmarket/numeric.hpp"

namespace mixmarket {

// Sum-to-one tolerance for probability vectors.
inline constexpr double kSimplexTol = 1e-12;

enum class MarketKind { arrow_debreu, pair_betting };

// Outcome space plus payoff map. Outcomes are integer ids: 0..K-1 for
// Arrow-Debreu securities, lexicographic permutation ranks for pair betting.
// Immutable after construction.
struct MarketDef {
  MarketKind kind = MarketKind::arrow_debreu;
  int dim = 0;     // dimension of the inventory space
  int pair_n = 0;  // number of ranked items (pair betting only)
  Mat payoffs;     // one row per outcome, payoffs.cols() == dim

  int num_outcomes() const { return static_cast<int>(payoffs.rows()); }

  Eigen::RowVectorXd payoff(int o) const {
    if (o < 0 || o >= num_outcomes())
      throw std::invalid_argument("MarketDef: unknown outcome " + std::to_string(o));
    return payoffs.row(o);
  }

  // K outcomes, payoff(i) = e_i.
  static std::shared_ptr<const MarketDef> arrow_debreu(int outcomes) {
    if (outcomes < 1) throw std::invalid_argument("arrow_debreu: need at least one outcome");
    auto m = std::make_shared<MarketDef>();
    m->kind = MarketKind::arrow_debreu;
    m->dim = outcomes;
    m->payoffs = Mat::Identity(outcomes, outcomes);
    return m;
  }

  // Outcomes are the n! permutations of {0..n-1}; coordinates are ordered
  // pairs (i,j), i != j, in lexicographic order, and payoff(sigma)_(i,j) = 1
  // iff sigma ranks i before j. dim = n(n-1).
  static std::shared_ptr<const MarketDef> pair_betting(int n) {
    if (n < 2 || n > 6) throw std::invalid_argument("pair_betting: n must be in [2, 6]");
    auto m = std::make_shared<MarketDef>();
    m->kind = MarketKind::pair_betting;
    m->pair_n = n;
    m->dim = n * (n - 1);

    std::vector<int> rank(n);
    std::iota(rank.begin(), rank.end(), 0);
    std::vector<std::vector<int>> perms;
    do {
      perms.push_back(rank);
    } while (std::next_permutation(rank.begin(), rank.end()));

    m->payoffs = Mat::Zero(static_cast<Eigen::Index>(perms.size()), m->dim);
    for (std::size_t o = 0; o < perms.size(); ++o) {
      int col = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          m->payoffs(static_cast<Eigen::Index>(o), col++) = perms[o][i] < perms[o][j] ? 1.0 : 0.0;
        }
    }
    return m;
  }
};

// Rows of the payoff map as a matrix, one outcome per row.
inline Mat payoff_matrix(const MarketDef& m) { return m.payoffs; }

inline bool is_simplex(const Vec& w, double tol = kSimplexTol) {
  if (w.size() == 0 || !all_finite(w)) return false;
  if (w.minCoeff() < 0.0) return false;
  return std::abs(w.sum() - 1.0) <= tol;
}

inline bool has_full_support(const Vec& w, double floor) {
  return w.size() > 0 && w.minCoeff() >= floor;
}

inline void require_simplex(const Vec& w, const char* what, double tol = kSimplexTol) {
  if (!is_simplex(w, tol))
    throw std::invalid_argument(std::string(what) + ": invalid weights (not on the probability simplex)");
}

// Rescale a nonnegative vector to sum to one. Rejects negative entries and
// vectors with no mass.
inline Vec normalize_weights(const Vec& v) {
  if (v.size() == 0 || !all_finite(v))
    throw std::invalid_argument("normalize_weights: invalid weights (non-finite or empty)");
  if (v.minCoeff() < 0.0)
    throw std::invalid_argument("normalize_weights: invalid weights (negative entry)");
  const double s = v.sum();
  if (s <= 0.0)
    throw std::invalid_argument("normalize_weights: invalid weights (zero total mass)");
  return v / s;
}

}  // namespace mixmarket
