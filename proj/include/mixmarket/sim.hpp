#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mixmarket/config.hpp"
#include "mixmarket/engine.hpp"
#include "mixmarket/learner.hpp"

namespace mixmarket {

// Harmonic posterior average of the expert scales: curvature-matched
// liquidity of the mixture.
inline double effective_liquidity(const Vec& pi, const Vec& scales) {
  require_simplex(pi, "effective_liquidity");
  if (pi.size() != scales.size())
    throw std::invalid_argument("effective_liquidity: length mismatch");
  if (scales.minCoeff() <= 0.0)
    throw std::invalid_argument("effective_liquidity: scales must be > 0");
  return 1.0 / (pi.array() / scales.array()).sum();
}

// Trade sizes on outcome 0 plus a regime label per round.
struct Flow {
  std::vector<double> sizes;
  std::vector<std::string> labels;
};

// Regime-driven flow: directional accumulation in R1/R4, small oscillation
// in R2, large oscillation in R3, and settle phases (T1-T3) whose trades
// ramp the inventory linearly back to neutral. Deterministic given the seed;
// jitter perturbs amplitudes by a relative uniform draw when configured.
inline Flow generate_flow(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Flow flow;
  std::mt19937_64 gen(seed);
  auto jitter = [&](double amp) {
    if (cfg.amplitude_jitter == 0.0) return amp;
    const double u = 2.0 * ((gen() >> 11) * 0x1.0p-53) - 1.0;
    return amp * (1.0 + cfg.amplitude_jitter * u);
  };
  double x = 0.0;
  auto push = [&](double dx, const std::string& label) {
    flow.sizes.push_back(dx);
    flow.labels.push_back(label);
    x += dx;
  };
  auto directional = [&](int rounds, double amp, const std::string& label) {
    for (int i = 0; i < rounds; ++i) push(jitter(amp), label);
  };
  auto alternating = [&](int rounds, double amp, const std::string& label) {
    for (int i = 0; i < rounds; ++i) push((i % 2 == 0 ? 1.0 : -1.0) * jitter(amp), label);
  };
  auto settle = [&](const std::string& label) {
    for (int i = 0; i < cfg.transition_rounds; ++i)
      push(-x / (cfg.transition_rounds - i), label);
  };

  directional(cfg.r1_rounds, cfg.r1_amplitude, "R1");
  settle("T1");
  alternating(cfg.r2_rounds, cfg.r2_amplitude, "R2");
  settle("T2");
  alternating(cfg.r3_rounds, cfg.r3_amplitude, "R3");
  settle("T3");
  directional(cfg.r4_rounds, cfg.r4_amplitude, "R4");
  return flow;
}

// One row of the simulation time series.
struct SimRecord {
  int t = 0;
  std::string regime;
  double x = 0.0;      // q_1 - q_2
  double b_eff = 0.0;  // effective liquidity
  double slip_mix = 0.0;
  Vec slip;  // per-expert slippage (fixed-market baselines on the same path)
  double liab_mix = 0.0;  // positive part of the mixed liability
  Vec liab;
  double fee = 0.0;
  double payment = 0.0;
  Vec w;  // liquidity weights in force
  double meta_entropy = 0.0;
  // cumulative regret decomposition terms
  double cum_abs_e1 = 0.0;
  double cum_e2 = 0.0;
  double cum_wgrad = 0.0;
  double cum_fee = 0.0;
  double cum_surr = 0.0;
  double cum_realized = 0.0;
};

struct SimResult {
  std::vector<SimRecord> records;
  RegretReport report;
  // per-round transfer inequality held at every prefix of the run
  bool decomposition_every_round = true;
  double fee_reserve = 0.0;
};

// Closed loop: Fixed-Share over (liquidity x profile) meta-experts drives
// the marginal mixture weights; the engine executes the regime flow and the
// ledger signals feed the regret report.
inline SimResult run_simulation(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  auto market = MarketDef::arrow_debreu(2);
  std::vector<CostExpert> experts;
  experts.reserve(cfg.liquidity.size());
  for (double b : cfg.liquidity) experts.push_back(CostExpert::lmsr(market, b));
  MixtureSpec spec(std::move(experts), cfg.beta);
  const Vec scales = spec.scales();

  EngineConfig ecfg;
  ecfg.weight_floor = cfg.weight_floor;
  ecfg.coeffs = SignalCoeffs{cfg.signal_a, cfg.signal_b, cfg.slip_scale, cfg.liab_scale};
  ecfg.solver = SolverOptions{cfg.solver_tol, cfg.solver_max_iters};
  ecfg.fee_policy.grid = cfg.fee_grid;
  if (cfg.fee_variant == "global") {
    ecfg.fee_policy.variant = FeeVariant::global_grid;
  } else if (cfg.fee_variant == "pathwise") {
    ecfg.fee_policy.variant = FeeVariant::pathwise;
  } else {
    // restricted: region = the reduced grid states
    ecfg.fee_policy.variant = FeeVariant::restricted;
    ecfg.fee_policy.region.reserve(cfg.fee_grid.count);
    for (int i = 0; i < cfg.fee_grid.count; ++i) {
      Vec q(2);
      q << cfg.fee_grid.point(i), 0.0;
      ecfg.fee_policy.region.push_back(std::move(q));
    }
  }

  MetaExpertGrid grid(static_cast<int>(cfg.liquidity.size()), cfg.coeff_profiles);
  LearnerConfig lcfg{cfg.eta, cfg.alpha, 1.0};
  Vec meta_w = Vec::Constant(grid.size(), 1.0 / grid.size());

  Engine engine(spec, ecfg, Vec::Zero(2), marginal_liquidity_weights(meta_w, grid));
  Flow flow = generate_flow(cfg, seed);

  SimResult out;
  out.records.reserve(flow.sizes.size());
  std::vector<RoundSignals> series;
  series.reserve(flow.sizes.size());
  const double a_eff = ecfg.coeffs.a_eff();
  double cum_abs_e1 = 0, cum_e2 = 0, cum_wgrad = 0, cum_fee = 0, cum_surr = 0, cum_real = 0;

  for (std::size_t i = 0; i < flow.sizes.size(); ++i) {
    Vec r(2);
    r << flow.sizes[i], 0.0;
    const Vec q_prev = engine.inventory();
    const Vec q_next = q_prev + r;

    Vec slip(spec.num_experts()), liab(spec.num_experts());
    try {
      for (int k = 0; k < spec.num_experts(); ++k) {
        slip[k] = slippage(spec.experts[k], q_prev, q_next);
        liab[k] = spec.experts[k].liability(q_next);
      }
      meta_w = fixed_share_update(
          meta_w, meta_losses(slip, liab, grid, cfg.slip_scale, cfg.liab_scale), lcfg);
      engine.execute_round(r, marginal_liquidity_weights(meta_w, grid));
    } catch (const std::exception& e) {
      throw std::runtime_error("simulation round " + std::to_string(i + 1) + ": " + e.what());
    }
    const RoundRecord& rec = engine.ledger().back();
    series.push_back(rec.signals);

    const RoundSignals& s = rec.signals;
    cum_abs_e1 += a_eff * std::abs(s.e1);
    cum_e2 += a_eff * s.e2;
    cum_wgrad += a_eff * std::max(s.wgrad_dot, 0.0);
    cum_fee += a_eff * s.fee;
    cum_surr += s.gamma_surr;
    cum_real += s.gamma_realized;
    if (s.gamma_realized > s.gamma_surr + a_eff * (std::abs(s.e1) + s.e2) +
                               a_eff * std::max(s.wgrad_dot, 0.0) + a_eff * s.fee + 1e-9)
      out.decomposition_every_round = false;

    SimRecord row;
    row.t = rec.t;
    row.regime = flow.labels[i];
    row.x = engine.inventory()[0] - engine.inventory()[1];
    row.b_eff = effective_liquidity(rec.pi_after, scales);
    row.slip_mix = s.slip_mix;
    row.slip = s.slip;
    row.liab_mix = std::max(s.liab_mix, 0.0);
    row.liab = s.liab;
    row.fee = rec.fee;
    row.payment = rec.payment;
    row.w = rec.w_before;
    double ent = 0.0;
    for (Eigen::Index k = 0; k < meta_w.size(); ++k)
      if (meta_w[k] > 0.0) ent -= meta_w[k] * std::log(meta_w[k]);
    row.meta_entropy = ent;
    row.cum_abs_e1 = cum_abs_e1;
    row.cum_e2 = cum_e2;
    row.cum_wgrad = cum_wgrad;
    row.cum_fee = cum_fee;
    row.cum_surr = cum_surr;
    row.cum_realized = cum_real;
    out.records.push_back(std::move(row));
  }
  out.report = regret_report(series, ecfg.coeffs, cfg.switch_budget);
  out.fee_reserve = engine.fee_reserve();
  return out;
}

namespace detail {

// Locale-independent formatting, 9 significant digits.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

}  // namespace detail

inline void emit_csv(std::span<const SimRecord> records, std::ostream& os) {
  const int m = records.empty() ? 2 : static_cast<int>(records.front().w.size());
  os << "t,regime,x,b_eff,slip_mix";
  for (int k = 0; k < m; ++k) os << ",slip_" << k;
  os << ",liab_mix";
  for (int k = 0; k < m; ++k) os << ",liab_" << k;
  os << ",fee,payment";
  for (int k = 0; k < m; ++k) os << ",w_" << k;
  os << ",meta_entropy,cum_abs_e1,cum_e2,cum_wgrad,cum_fee,cum_surr,cum_realized\n";
  for (const SimRecord& r : records) {
    os << r.t << ',' << r.regime << ',' << detail::format_number(r.x) << ','
       << detail::format_number(r.b_eff) << ',' << detail::format_number(r.slip_mix);
    for (int k = 0; k < m; ++k) os << ',' << detail::format_number(r.slip[k]);
    os << ',' << detail::format_number(r.liab_mix);
    for (int k = 0; k < m; ++k) os << ',' << detail::format_number(r.liab[k]);
    os << ',' << detail::format_number(r.fee) << ',' << detail::format_number(r.payment);
    for (int k = 0; k < m; ++k) os << ',' << detail::format_number(r.w[k]);
    os << ',' << detail::format_number(r.meta_entropy) << ','
       << detail::format_number(r.cum_abs_e1) << ',' << detail::format_number(r.cum_e2) << ','
       << detail::format_number(r.cum_wgrad) << ',' << detail::format_number(r.cum_fee) << ','
       << detail::format_number(r.cum_surr) << ',' << detail::format_number(r.cum_realized)
       << '\n';
  }
}

inline std::string csv_string(std::span<const SimRecord> records) {
  std::ostringstream os;
  emit_csv(records, os);
  return os.str();
}

inline void write_csv(std::span<const SimRecord> records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "'");
  emit_csv(records, out);
  out.flush();
  if (!out) throw std::runtime_error("write_csv: write failed for '" + path + "'");
}

}  // namespace mixmarket
