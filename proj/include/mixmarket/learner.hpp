#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mixmarket/market.hpp"
#include "mixmarket/signals.hpp"

namespace mixmarket {

// Meta-expert class: one expert per (liquidity index, coefficient profile)
// pair, flat index = k * profiles.size() + m.
struct MetaExpertGrid {
  int liquidity_count = 0;
  std::vector<std::pair<double, double>> profiles;  // (a_m, b_m)

  MetaExpertGrid(int liq, std::vector<std::pair<double, double>> prof)
      : liquidity_count(liq), profiles(std::move(prof)) {
    if (liquidity_count < 1 || profiles.empty())
      throw std::invalid_argument("MetaExpertGrid: empty grid");
    for (const auto& [a, b] : profiles)
      if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("MetaExpertGrid: profile coefficients must be > 0");
  }

  int size() const { return liquidity_count * static_cast<int>(profiles.size()); }
  int flat(int k, int m) const { return k * static_cast<int>(profiles.size()) + m; }
  int liquidity_of(int flat_index) const { return flat_index / static_cast<int>(profiles.size()); }
  int profile_of(int flat_index) const { return flat_index % static_cast<int>(profiles.size()); }
};

struct LearnerConfig {
  double eta = 5e-4;   // multiplicative-weights learning rate
  double alpha = 1e-4; // share of uniform mixed in each round
  double loss_range = 1.0;  // U in the tracking bound

  void validate() const {
    if (!(eta > 0.0)) throw std::invalid_argument("LearnerConfig: eta must be > 0");
    if (alpha < 0.0 || alpha > 1.0)
      throw std::invalid_argument("LearnerConfig: alpha must be in [0, 1]");
    if (!(loss_range > 0.0)) throw std::invalid_argument("LearnerConfig: loss range must be > 0");
  }
};

// Loss of meta-expert (k, m): a_m (S_k - mean S)/sigma_slip + b_m L_k/sigma_liab.
inline Vec meta_losses(const Vec& slip, const Vec& liab, const MetaExpertGrid& grid,
                       double sigma_slip = 1.0, double sigma_liab = 1.0) {
  if (slip.size() != grid.liquidity_count || liab.size() != grid.liquidity_count)
    throw std::invalid_argument("meta_losses: signal length mismatch");
  if (!(sigma_slip > 0.0) || !(sigma_liab > 0.0))
    throw std::invalid_argument("meta_losses: scales must be > 0");
  const double mean = slip.mean();
  Vec out(grid.size());
  for (int k = 0; k < grid.liquidity_count; ++k)
    for (std::size_t m = 0; m < grid.profiles.size(); ++m) {
      const auto& [am, bm] = grid.profiles[m];
      out[grid.flat(k, static_cast<int>(m))] =
          am * (slip[k] - mean) / sigma_slip + bm * liab[k] / sigma_liab;
    }
  return out;
}

// Multiplicative-weights step mixed with the uniform distribution. The
// minimum loss is subtracted before exponentiation, so shifting all losses
// by a constant leaves the output bitwise unchanged.
inline Vec fixed_share_update(const Vec& w, const Vec& losses, const LearnerConfig& cfg) {
  cfg.validate();
  require_simplex(w, "fixed_share_update");
  if (losses.size() != w.size())
    throw std::invalid_argument("fixed_share_update: loss length mismatch");
  if (!all_finite(losses))
    throw std::invalid_argument("fixed_share_update: invalid loss (non-finite)");
  const double lo = losses.minCoeff();
  Vec next(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k)
    next[k] = w[k] * std::exp(-cfg.eta * (losses[k] - lo));
  next /= next.sum();
  const double m = static_cast<double>(w.size());
  return (1.0 - cfg.alpha) * next + Vec::Constant(w.size(), cfg.alpha / m);
}

// Sum meta weights over all profiles sharing each liquidity index.
inline Vec marginal_liquidity_weights(const Vec& meta_w, const MetaExpertGrid& grid) {
  if (meta_w.size() != grid.size())
    throw std::invalid_argument("marginal_liquidity_weights: length mismatch");
  Vec out = Vec::Zero(grid.liquidity_count);
  for (int i = 0; i < grid.size(); ++i) out[grid.liquidity_of(i)] += meta_w[i];
  return out;
}

// A_{J,M,T} = (J+1) log M + J log(e(T-1)/J), with 0 log(c/0) := 0.
inline double switching_complexity(int horizon, int experts, int switches) {
  double a = (switches + 1) * std::log(static_cast<double>(experts));
  if (switches > 0)
    a += switches *
         std::log(std::exp(1.0) * (horizon - 1) / static_cast<double>(switches));
  return a;
}

// Tracking-regret bound U sqrt(2 T A_{J,M,T}); call with U = 2B for signals
// bounded by B in absolute value.
inline double tracking_bound(int horizon, int experts, int switches, double loss_range) {
  if (horizon < 1 || experts < 1 || !(loss_range > 0.0))
    throw std::invalid_argument("tracking_bound: need T >= 1, M >= 1, U > 0");
  if (switches < 0 || switches > horizon - 1)
    throw std::invalid_argument("tracking_bound: invalid switch budget");
  const double a = switching_complexity(horizon, experts, switches);
  return loss_range * std::sqrt(2.0 * horizon * a);
}

// Learning rate and share parameter tuned to the tracking bound.
inline double tuned_eta(int horizon, int experts, int switches, double loss_range) {
  const double a = switching_complexity(horizon, experts, switches);
  return std::sqrt(8.0 * a / horizon) / loss_range;
}

inline double tuned_alpha(int horizon, int switches) {
  if (switches <= 0 || horizon <= 1) return 0.0;
  return static_cast<double>(switches) / (horizon - 1);
}

struct ComparatorResult {
  double total = 0.0;
  std::vector<int> sequence;
};

// Minimum total loss over expert sequences with at most `switches` changes.
// DP over (round, expert, switches used); ties prefer staying with the
// current expert, then the lowest expert index, and the final pick prefers
// the lowest expert then the fewest switches.
inline ComparatorResult best_switching_comparator(const Mat& losses, int switches) {
  const int T = static_cast<int>(losses.rows());
  const int M = static_cast<int>(losses.cols());
  if (T < 1 || M < 1) throw std::invalid_argument("best_switching_comparator: empty losses");
  if (switches < 0 || switches > T - 1)
    throw std::invalid_argument("best_switching_comparator: invalid switch budget");

  const double inf = std::numeric_limits<double>::infinity();
  const int S = switches + 1;
  auto idx = [&](int k, int s) { return k * S + s; };
  std::vector<double> cost(static_cast<std::size_t>(M) * S, inf);
  std::vector<int> parent(static_cast<std::size_t>(T) * M * S, -1);
  for (int k = 0; k < M; ++k) cost[idx(k, 0)] = losses(0, k);

  for (int t = 1; t < T; ++t) {
    // best and second-best predecessor per switch count
    std::vector<int> best_k(S, -1), second_k(S, -1);
    for (int s = 0; s < S; ++s) {
      for (int k = 0; k < M; ++k) {
        const double v = cost[idx(k, s)];
        if (best_k[s] < 0 || v < cost[idx(best_k[s], s)]) {
          second_k[s] = best_k[s];
          best_k[s] = k;
        } else if (second_k[s] < 0 || v < cost[idx(second_k[s], s)]) {
          second_k[s] = k;
        }
      }
    }
    std::vector<double> next(static_cast<std::size_t>(M) * S, inf);
    for (int s = 0; s < S; ++s)
      for (int k = 0; k < M; ++k) {
        double stay = cost[idx(k, s)];
        int from = stay < inf ? k : -1;
        if (s > 0) {
          int cand = best_k[s - 1] == k ? second_k[s - 1] : best_k[s - 1];
          if (cand >= 0 && cost[idx(cand, s - 1)] < inf) {
            const double sw = cost[idx(cand, s - 1)];
            if (sw < stay) {
              stay = sw;
              from = cand;
            }
          }
        }
        if (from >= 0) {
          next[idx(k, s)] = losses(t, k) + stay;
          parent[(static_cast<std::size_t>(t) * M + k) * S + s] = from;
        }
      }
    cost.swap(next);
  }

  int best_end = -1, best_s = -1;
  for (int s = 0; s < S; ++s)
    for (int k = 0; k < M; ++k)
      if (best_end < 0 || cost[idx(k, s)] < cost[idx(best_end, best_s)] ||
          (cost[idx(k, s)] == cost[idx(best_end, best_s)] &&
           (k < best_end || (k == best_end && s < best_s))))
        best_end = k, best_s = s;

  ComparatorResult res;
  res.total = cost[idx(best_end, best_s)];
  res.sequence.assign(static_cast<std::size_t>(T), 0);
  int k = best_end, s = best_s;
  for (int t = T - 1; t >= 0; --t) {
    res.sequence[static_cast<std::size_t>(t)] = k;
    if (t == 0) break;
    const int from = parent[(static_cast<std::size_t>(t) * M + k) * S + s];
    if (from != k) --s;
    k = from;
  }
  return res;
}

// One Fixed-Share pass over a loss matrix; returns the weights in force each
// round and the weighted loss total.
struct FixedShareRun {
  Mat weights;  // T x M, row t = weights used at round t
  double weighted_total = 0.0;
};

// clip_losses clamps entries to [0, loss_range] before each update, the
// hypothesis of the tracking bound; simulation runs leave losses as is.
inline FixedShareRun run_fixed_share(const Mat& losses, const LearnerConfig& cfg,
                                     bool clip_losses = false) {
  cfg.validate();
  const int T = static_cast<int>(losses.rows());
  const int M = static_cast<int>(losses.cols());
  if (T < 1 || M < 1) throw std::invalid_argument("run_fixed_share: empty losses");
  FixedShareRun run;
  run.weights.resize(T, M);
  Vec w = Vec::Constant(M, 1.0 / M);
  for (int t = 0; t < T; ++t) {
    const Vec raw = losses.row(t).transpose();
    run.weights.row(t) = w.transpose();
    run.weighted_total += w.dot(raw);
    w = fixed_share_update(w, clip_losses ? raw.cwiseMax(0.0).cwiseMin(cfg.loss_range) : raw,
                           cfg);
  }
  return run;
}

// Switching-regret accounting for a run: surrogate and realized regret
// against the best <=J-switch sequence, plus the transfer-decomposition
// sums. decomposition_ok checks
//   realized <= surrogate + sum a|E1| + sum a E2 + C_w + C_f + 1e-6.
struct RegretReport {
  double comparator_total = 0.0;
  double surrogate_regret = 0.0;
  double realized_regret = 0.0;
  double sum_abs_e1 = 0.0;      // sum_t a |E1_t|
  double sum_e2 = 0.0;          // sum_t a E2_t
  double update_cost = 0.0;     // C_w = sum_t a [grad_w C . dw]_+
  double fee_cost = 0.0;        // C_f = sum_t a fee_t
  std::vector<int> sequence;
  bool decomposition_ok = false;
};

inline RegretReport regret_report(std::span<const RoundSignals> rounds, const SignalCoeffs& c,
                                  int switches) {
  if (rounds.empty()) throw std::invalid_argument("regret_report: empty series");
  const int T = static_cast<int>(rounds.size());
  const int M = static_cast<int>(rounds.front().gamma_hyb.size());
  Mat hyb(T, M);
  RegretReport rep;
  double surr = 0.0, realized = 0.0;
  const double a = c.a_eff();
  for (int t = 0; t < T; ++t) {
    const RoundSignals& s = rounds[static_cast<std::size_t>(t)];
    if (static_cast<int>(s.gamma_hyb.size()) != M)
      throw std::invalid_argument("regret_report: series length mismatch");
    hyb.row(t) = s.gamma_hyb.transpose();
    surr += s.gamma_surr;
    realized += s.gamma_realized;
    rep.sum_abs_e1 += a * std::abs(s.e1);
    rep.sum_e2 += a * s.e2;
    rep.update_cost += a * std::max(s.wgrad_dot, 0.0);
    rep.fee_cost += a * s.fee;
  }
  ComparatorResult comp = best_switching_comparator(hyb, switches);
  rep.comparator_total = comp.total;
  rep.sequence = std::move(comp.sequence);
  rep.surrogate_regret = surr - comp.total;
  rep.realized_regret = realized - comp.total;
  rep.decomposition_ok =
      rep.realized_regret <= rep.surrogate_regret + rep.sum_abs_e1 + rep.sum_e2 +
                                 rep.update_cost + rep.fee_cost + 1e-6;
  return rep;
}

}  // namespace mixmarket
