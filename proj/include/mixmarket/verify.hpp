#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mixmarket/engine.hpp"
#include "mixmarket/learner.hpp"
#include "mixmarket/sim.hpp"

// Executable forms of the mechanism's guarantees: no-arbitrage, bounded
// worst-case loss, the calculus identities of the mixed potential, the
// signal-hierarchy inequalities, expressiveness, positive upside, tracking
// regret, and ordinal reproduction of the regime simulation. The CLI `check`
// subcommand and the acceptance suite both run these.
namespace mixmarket::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t bits() { return gen_(); }
  int index(int n) { return static_cast<int>(bits() % static_cast<std::uint64_t>(n)); }

  Vec vector(int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  // Full-support random simplex point: Dirichlet(1) draw mixed with uniform.
  Vec simplex(int n, double uniform_share = 0.02) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = -std::log(1.0 - uniform());
    if (v.sum() <= 0.0) return Vec::Constant(n, 1.0 / n);
    v /= v.sum();
    return (1.0 - uniform_share) * v + Vec::Constant(n, uniform_share / n);
  }

  Vec unit(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(-1.0, 1.0);
    const double nn = v.norm();
    if (nn == 0.0) return Vec::Unit(n, 0);
    return v / nn;
  }

 private:
  std::mt19937_64 gen_;
};

inline MixtureSpec reference_mixture() {
  auto market = MarketDef::arrow_debreu(2);
  std::vector<CostExpert> experts{CostExpert::lmsr(market, 1.0), CostExpert::lmsr(market, 12.0)};
  return MixtureSpec(std::move(experts), 1.0);
}

inline MixtureSpec pair_mixture() {
  auto market = MarketDef::pair_betting(3);
  std::vector<CostExpert> experts{CostExpert::pair_betting(market, 0.7),
                                  CostExpert::pair_betting(market, 2.5)};
  return MixtureSpec(std::move(experts), 1.2);
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

// Criteria 1 and 2: seeded random runs against the reference mixture under
// the global fee policy. Checks
//   sum payments >= min_o payoff(o).(q_T - q_0) - 1e-9
//   max_o Loss_T(o) <= loss_bound + 1e-9.
inline std::vector<CheckResult> no_arbitrage_and_loss(std::uint64_t seed = 1, int runs = 1000,
                                                      int max_rounds = 50) {
  detail::Rng rng(seed);
  MixtureSpec spec = detail::reference_mixture();
  const Vec w1 = Vec::Constant(2, 0.5);
  const double bound = loss_bound(spec, Vec::Zero(2), w1);
  const double bound_ref = std::log(2.0) + std::log(2049.0);

  detail::Timer timer;
  double worst_noarb = std::numeric_limits<double>::infinity();
  double worst_loss_slack = std::numeric_limits<double>::infinity();
  int bad_noarb = 0, bad_loss = 0;
  EngineConfig cfg;
  for (int run = 0; run < runs; ++run) {
    const int T = 1 + rng.index(max_rounds);
    Engine engine(spec, cfg, Vec::Zero(2), w1);
    for (int t = 0; t < T; ++t) engine.execute_round(rng.vector(2, -3.0, 3.0), rng.simplex(2));
    const Vec net = engine.inventory() - engine.initial_inventory();
    const double min_payout = (spec.market().payoffs * net).minCoeff();
    const double pay = engine.payments_total();
    worst_noarb = std::min(worst_noarb, pay - min_payout);
    if (pay < min_payout - 1e-9) ++bad_noarb;
    double max_loss = -std::numeric_limits<double>::infinity();
    for (int o = 0; o < spec.market().num_outcomes(); ++o)
      max_loss = std::max(max_loss, engine.loss_under_outcome(o));
    worst_loss_slack = std::min(worst_loss_slack, bound - max_loss);
    if (max_loss > bound + 1e-9) ++bad_loss;
  }
  const double secs = timer.seconds();

  std::vector<CheckResult> out;
  out.push_back({"no-arbitrage",
                 bad_noarb == 0 && secs < 30.0,
                 std::to_string(runs) + " runs, min payment margin " + detail::fmt(worst_noarb) +
                     ", " + detail::fmt(secs) + "s"});
  out.push_back({"worst-case loss",
                 bad_loss == 0 && std::abs(bound - bound_ref) <= 1e-6,
                 "bound " + detail::fmt(bound) + " (log 2 + log 2049 = " + detail::fmt(bound_ref) +
                     "), min slack " + detail::fmt(worst_loss_slack)});
  return out;
}

// Criterion 3: gradient/Hessian finite-difference agreement and the Rayleigh
// smoothness bound on random states of the reference mixture.
inline CheckResult calculus(std::uint64_t seed = 2, int points = 200) {
  detail::Rng rng(seed);
  MixtureSpec spec = detail::reference_mixture();
  const double h = 1e-5;
  const double l_smooth = smoothness_constant(spec, 1.0);

  detail::Timer timer;
  double worst_grad = 0.0, worst_hess = 0.0, worst_ray = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const Vec q = rng.vector(2, -5.0, 5.0);
    const Vec w = rng.simplex(2);
    const Vec g = mix_grad(spec, q, w);
    Vec g_fd(2);
    for (int c = 0; c < 2; ++c) {
      Vec qp = q, qm = q;
      qp[c] += h;
      qm[c] -= h;
      g_fd[c] = (mix_cost(spec, qp, w) - mix_cost(spec, qm, w)) / (2.0 * h);
    }
    worst_grad = std::max(worst_grad, (g - g_fd).lpNorm<Eigen::Infinity>() /
                                          g.lpNorm<Eigen::Infinity>());

    const Mat hess = mix_hessian(spec, q, w);
    Mat h_fd(2, 2);
    for (int c = 0; c < 2; ++c) {
      Vec qp = q, qm = q;
      qp[c] += h;
      qm[c] -= h;
      h_fd.col(c) = (mix_grad(spec, qp, w) - mix_grad(spec, qm, w)) / (2.0 * h);
    }
    worst_hess = std::max(worst_hess, (hess - h_fd).cwiseAbs().maxCoeff());

    const Vec r = rng.unit(2);
    worst_ray = std::max(worst_ray, r.dot(hess * r) - l_smooth);
  }
  const double secs = timer.seconds();
  const bool pass = worst_grad <= 1e-6 && worst_hess <= 1e-4 && worst_ray <= 1e-6 && secs < 10.0;
  return {"calculus",
          pass,
          "grad rel err " + detail::fmt(worst_grad) + ", hess err " + detail::fmt(worst_hess) +
              ", rayleigh slack " + detail::fmt(-worst_ray) + ", " + detail::fmt(secs) + "s"};
}

// Criterion 4: the signal and potential inequalities on random instances at 1e-9.
inline CheckResult inequalities(std::uint64_t seed = 3, int instances = 1000) {
  detail::Rng rng(seed);
  std::vector<MixtureSpec> specs;
  specs.push_back(detail::reference_mixture());
  specs.push_back(detail::pair_mixture());
  const SignalCoeffs raw{1.0, 1.0, 1.0, 1.0};

  int bad = 0;
  std::string first_bad;
  auto fail = [&](const std::string& what) {
    ++bad;
    if (first_bad.empty()) first_bad = what;
  };

  for (const MixtureSpec& spec : specs) {
    const int d = spec.market().dim;
    const int m = spec.num_experts();
    const double span = d > 2 ? 1.5 : 4.0;
    for (int i = 0; i < instances; ++i) {
      const Vec q_prev = rng.vector(d, -span, span);
      const Vec q_next = q_prev + rng.vector(d, -2.0, 2.0);
      const Vec w = rng.simplex(m);
      const RoundSignals s =
          compute_round_signals(spec, q_prev, q_next, w, rng.simplex(m), 0.0, raw);

      if (s.gamma_mix > s.gamma_surr + s.e1 + s.e2 + 1e-9) fail("bridge");
      if (s.liab_mix_anchored > w.dot(s.liab) + 1e-9) fail("liability-level");
      const Vec pi_next = anchored_posterior(spec, q_next, w);
      if (s.slip_mix_anchored > pi_next.dot(s.slip) + s.e2 + 1e-9) fail("slippage-bound");
      const Vec w_new = rng.simplex(m);
      const double change = mix_cost(spec, q_next, w_new) - mix_cost(spec, q_next, w);
      if (change > weight_update_bound(spec, q_next, w, w_new) + 1e-9) fail("weight-concavity");
    }
  }

  for (int i = 0; i < 10000; ++i) {
    const int n = 2 + rng.index(5);
    const Vec u = rng.simplex(n), v = rng.simplex(n);
    const double l1 = (u - v).lpNorm<1>();
    for (int j = 0; j < n; ++j)
      if (l1 > l1_dominance_bound(u, v, j) + 1e-12) fail("dominance");
  }

  // telescoping identity and payment lower bound on random engine runs
  MixtureSpec spec = detail::reference_mixture();
  EngineConfig cfg;
  for (int i = 0; i < 1000; ++i) {
    const int T = 1 + rng.index(10);
    Engine engine(spec, cfg, Vec::Zero(2), rng.simplex(2));
    for (int t = 0; t < T; ++t) engine.execute_round(rng.vector(2, -3.0, 3.0), rng.simplex(2));
    if (std::abs(engine.telescoping_gap()) > 1e-9) fail("telescoping");
    const double floor_pay = mix_cost(spec, engine.inventory(), engine.initial_weights()) -
                             mix_cost(spec, engine.initial_inventory(), engine.initial_weights());
    if (engine.payments_total() < floor_pay - 1e-9) fail("payment-lower-bound");
  }

  return {"inequalities", bad == 0,
          bad == 0 ? "bridge, liability, slippage, concavity, dominance, telescoping, payment LB"
                   : "first failure: " + first_bad};
}

// Criterion 5: invert the price map on random interior targets.
inline CheckResult expressiveness(std::uint64_t seed = 4, int targets = 100) {
  detail::Rng rng(seed);
  MixtureSpec spec = detail::reference_mixture();
  const Vec w = Vec::Constant(2, 0.5);
  SolverOptions opts{1e-6, 200};

  detail::Timer timer;
  int bad = 0;
  double worst_residual = 0.0;
  int worst_iters = 0;
  for (int i = 0; i < targets; ++i) {
    const double p = rng.uniform(0.01, 0.99);
    Vec target(2);
    target << p, 1.0 - p;
    const SolveResult res = solve_state_for_price(spec, w, target, opts);
    worst_residual = std::max(worst_residual, res.residual);
    worst_iters = std::max(worst_iters, res.iters);
    if (!res.converged || res.residual > 1e-6) ++bad;
  }
  const double secs = timer.seconds();
  return {"expressiveness", bad == 0 && secs < 5.0,
          "max residual " + detail::fmt(worst_residual) + ", max iters " +
              std::to_string(worst_iters) + ", " + detail::fmt(secs) + "s"};
}

// Criterion 6: profitable trade-size intervals for a favorable outcome, with
// and without fixed fees, and under one adaptive Fixed-Share update.
inline CheckResult upside() {
  auto market = MarketDef::arrow_debreu(2);
  MixtureSpec single(std::vector<CostExpert>{CostExpert::lmsr(market, 1.0)}, 1.0);
  const Vec w1 = Vec::Constant(1, 1.0);
  const Vec q0 = Vec::Zero(2);
  const Vec dir = Vec::Unit(2, 0);

  std::vector<double> s_grid;
  for (int i = 1; i <= 600; ++i) s_grid.push_back(0.05 * i);

  const auto free_scan = upside_scan(single, q0, w1, 0, dir, s_grid, 0.0);
  const auto small_fee = upside_scan(single, q0, w1, 0, dir, s_grid, 0.1);
  const auto big_fee = upside_scan(single, q0, w1, 0, dir, s_grid, 0.8);

  // adaptive case: directional flow under Fixed-Share at the default
  // learning rates until the weight updates charge positive fees, then scan
  // the underpriced side from the current state
  MixtureSpec spec = detail::reference_mixture();
  EngineConfig cfg;
  cfg.coeffs = SignalCoeffs{1.5, 1.5, 1.0, 4.0};
  Engine engine(spec, cfg, Vec::Zero(2), Vec::Constant(2, 0.5));
  MetaExpertGrid grid(2, {{6.0, 0.2}, {3.0, 0.7}, {1.5, 1.5}, {0.7, 3.0}, {0.2, 6.0}});
  LearnerConfig lcfg{5e-4, 1e-4, 1.0};
  Vec meta_w = Vec::Constant(grid.size(), 0.1);
  for (int t = 0; t < 30; ++t) {
    Vec r(2);
    r << 1.0, 0.0;
    Vec slip(2), liab(2);
    for (int k = 0; k < 2; ++k) {
      slip[k] = slippage(spec.experts[k], engine.inventory(), engine.inventory() + r);
      liab[k] = spec.experts[k].liability(engine.inventory() + r);
    }
    meta_w = fixed_share_update(meta_w, meta_losses(slip, liab, grid, 1.0, 4.0), lcfg);
    engine.execute_round(r, marginal_liquidity_weights(meta_w, grid));
  }
  const double fee = engine.ledger().back().fee;
  const Vec buy_other = Vec::Unit(2, 1);
  const double margin =
      (spec.market().payoff(1).transpose() - mix_grad(spec, engine.inventory(), engine.weights()))
          .dot(buy_other);
  const auto adaptive = engine.upside_scan(1, buy_other, s_grid);

  const bool pass = free_scan.has_value() && small_fee.has_value() && !big_fee.has_value() &&
                    margin >= 0.3 && adaptive.has_value();
  std::string detail = "F0=0 " + std::string(free_scan ? "nonempty" : "empty") + ", F0=0.1 " +
                       (small_fee ? "nonempty" : "empty") + ", F0=0.8 " +
                       (big_fee ? "nonempty" : "empty") + ", adaptive (margin " +
                       detail::fmt(margin) + ", fee " + detail::fmt(fee) + ") " +
                       (adaptive ? "nonempty" : "empty");
  return {"positive upside", pass, detail};
}

namespace detail {

// Exhaustive best <=J-switch sequence, for cross-checking the DP.
inline double enumerate_comparator(const Mat& losses, int switches) {
  const int T = static_cast<int>(losses.rows());
  const int M = static_cast<int>(losses.cols());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> seq(static_cast<std::size_t>(T));
  auto rec = [&](auto&& self, int t, int used) -> void {
    if (t == T) {
      double total = 0.0;
      for (int i = 0; i < T; ++i) total += losses(i, seq[static_cast<std::size_t>(i)]);
      best = std::min(best, total);
      return;
    }
    for (int k = 0; k < M; ++k) {
      const int nu = t == 0 ? 0 : used + (k != seq[static_cast<std::size_t>(t - 1)] ? 1 : 0);
      if (nu > switches) continue;
      seq[static_cast<std::size_t>(t)] = k;
      self(self, t + 1, nu);
    }
  };
  rec(rec, 0, 0);
  return best;
}

}  // namespace detail

// Criterion 7: DP comparator vs exhaustive enumeration on the full sweep
// T <= 8, M <= 3, J <= 3, then bound-tuned Fixed-Share against the tracking
// bound on random loss arrays, plus the frozen bound value for
// (T, M, J, U) = (100, 2, 1, 1).
inline CheckResult tracking(std::uint64_t seed = 5) {
  detail::Rng rng(seed);
  detail::Timer timer;
  int bad_dp = 0;
  for (int T = 1; T <= 8; ++T)
    for (int M = 1; M <= 3; ++M)
      for (int J = 0; J <= std::min(3, T - 1); ++J)
        for (int rep = 0; rep < 4; ++rep) {
          Mat losses(T, M);
          for (int t = 0; t < T; ++t)
            for (int k = 0; k < M; ++k)
              losses(t, k) = rep == 0 ? (rng.bits() % 2 ? 1.0 : 0.0) : rng.uniform();
          const ComparatorResult dp = best_switching_comparator(losses, J);
          if (std::abs(dp.total - detail::enumerate_comparator(losses, J)) > 1e-12) ++bad_dp;
          int sw = 0;
          double path_total = losses(0, dp.sequence[0]);
          for (int t = 1; t < T; ++t) {
            sw += dp.sequence[static_cast<std::size_t>(t)] !=
                  dp.sequence[static_cast<std::size_t>(t - 1)];
            path_total += losses(t, dp.sequence[static_cast<std::size_t>(t)]);
          }
          if (sw > J || std::abs(path_total - dp.total) > 1e-12) ++bad_dp;
        }

  int bad_regret = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  const int T = 256, M = 5;
  for (int J = 0; J <= 2; ++J) {
    const double bound = tracking_bound(T, M, J, 1.0);
    LearnerConfig cfg{tuned_eta(T, M, J, 1.0), tuned_alpha(T, J), 1.0};
    for (int rep = 0; rep < 50; ++rep) {
      Mat losses(T, M);
      for (int t = 0; t < T; ++t)
        for (int k = 0; k < M; ++k) losses(t, k) = rng.uniform();
      const double regret = run_fixed_share(losses, cfg, /*clip_losses=*/true).weighted_total -
                            best_switching_comparator(losses, J).total;
      worst_margin = std::min(worst_margin, bound - regret);
      if (regret > bound) ++bad_regret;
    }
  }
  const double frozen = tracking_bound(100, 2, 1, 1.0);
  const bool frozen_ok = std::abs(frozen - 37.3668682424804783) <= 1e-6;
  const double secs = timer.seconds();
  return {"tracking", bad_dp == 0 && bad_regret == 0 && frozen_ok && secs < 60.0,
          "dp sweep ok, min bound margin " + detail::fmt(worst_margin) + ", bound(100,2,1,1)=" +
              detail::fmt(frozen) + ", " + detail::fmt(secs) + "s"};
}

// Criterion 8: ordinal reproduction of the regime figure on the default
// seeded run.
inline CheckResult simulation(std::uint64_t seed = 42) {
  detail::Timer timer;
  SimConfig cfg;
  const SimResult res = run_simulation(cfg, seed);

  auto mean_of = [&](const std::string& label, auto&& get) {
    double sum = 0.0;
    int n = 0;
    for (const SimRecord& r : res.records)
      if (r.regime == label) {
        sum += get(r);
        ++n;
      }
    return sum / std::max(n, 1);
  };

  const double beff_r1 = mean_of("R1", [](const SimRecord& r) { return r.b_eff; });
  const double beff_r2 = mean_of("R2", [](const SimRecord& r) { return r.b_eff; });
  const double beff_r4 = mean_of("R4", [](const SimRecord& r) { return r.b_eff; });

  int r3_total = 0, r3_between = 0;
  double liab_r1_peak = 0.0, liab_r2_max = 0.0;
  double b_lo = std::numeric_limits<double>::infinity(), b_hi = 0.0;
  std::vector<double> liab_mix_14, liab_high_14;
  double low_mean = 0.0, high_mean = 0.0;
  int n14 = 0;
  for (const SimRecord& r : res.records) {
    b_lo = std::min(b_lo, r.b_eff);
    b_hi = std::max(b_hi, r.b_eff);
    if (r.regime == "R3") {
      ++r3_total;
      if (r.slip_mix >= r.slip.minCoeff() - 1e-9 && r.slip_mix <= r.slip.maxCoeff() + 1e-9)
        ++r3_between;
    }
    if (r.regime == "R1") liab_r1_peak = std::max(liab_r1_peak, r.liab_mix);
    if (r.regime == "R2") liab_r2_max = std::max(liab_r2_max, r.liab_mix);
    if (r.regime == "R1" || r.regime == "R4") {
      low_mean += r.liab[0];
      high_mean += r.liab[1];
      ++n14;
    }
  }
  const int high_idx = high_mean >= low_mean ? 1 : 0;
  for (const SimRecord& r : res.records)
    if (r.regime == "R1" || r.regime == "R4") {
      liab_mix_14.push_back(r.liab_mix);
      liab_high_14.push_back(r.liab[high_idx]);
    }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < liab_mix_14.size(); ++i) {
    mx += liab_mix_14[i];
    my += liab_high_14[i];
  }
  mx /= liab_mix_14.size();
  my /= liab_high_14.size();
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < liab_mix_14.size(); ++i) {
    sxy += (liab_mix_14[i] - mx) * (liab_high_14[i] - my);
    sxx += (liab_mix_14[i] - mx) * (liab_mix_14[i] - mx);
    syy += (liab_high_14[i] - my) * (liab_high_14[i] - my);
  }
  const double corr = sxy / std::sqrt(sxx * syy);

  const double between_frac = static_cast<double>(r3_between) / std::max(r3_total, 1);
  const double secs = timer.seconds();
  const bool pass = beff_r2 > beff_r1 && beff_r2 > beff_r4 && between_frac >= 0.9 &&
                    liab_r2_max < 0.1 * liab_r1_peak && corr > 0.9 && b_lo >= 1.0 - 1e-9 &&
                    b_hi <= 12.0 + 1e-9 && res.decomposition_every_round && secs < 60.0;
  return {"simulation",
          pass,
          "b_eff means R1/R2/R4 " + detail::fmt(beff_r1) + "/" + detail::fmt(beff_r2) + "/" +
              detail::fmt(beff_r4) + ", R3 between " + detail::fmt(between_frac) + ", liab R2/R1peak " +
              detail::fmt(liab_r2_max / liab_r1_peak) + ", corr " + detail::fmt(corr) + ", " +
              detail::fmt(secs) + "s"};
}

// Criterion 9: identical seed gives byte-identical CSV.
inline CheckResult determinism(std::uint64_t seed = 42) {
  SimConfig cfg;
  const std::string a = csv_string(run_simulation(cfg, seed).records);
  const std::string b = csv_string(run_simulation(cfg, seed).records);
  return {"determinism", !a.empty() && a == b,
          a == b ? std::to_string(a.size()) + " bytes, identical" : "outputs differ"};
}

inline std::vector<CheckResult> run_all(std::uint64_t seed = 1) {
  std::vector<CheckResult> out = no_arbitrage_and_loss(seed);
  out.push_back(calculus(seed + 1));
  out.push_back(inequalities(seed + 2));
  out.push_back(expressiveness(seed + 3));
  out.push_back(upside());
  out.push_back(tracking(seed + 4));
  out.push_back(simulation(42));
  out.push_back(determinism(42));
  return out;
}

}  // namespace mixmarket::verify
