#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mixmarket/fees.hpp"

namespace mixmarket {

// Full parameter set for the regime simulation. Defaults reproduce the
// two-expert binary-LMSR setup: b = (1, 12), beta = 1, Fixed-Share over
// liquidity x coefficient-profile meta-experts, global switch fee on the
// reduced grid [-140, 140] with 5001 points.
struct SimConfig {
  // market
  std::vector<double> liquidity{1.0, 12.0};
  double beta = 1.0;

  // fee
  std::string fee_variant = "global";  // global | restricted | pathwise
  GridSpec fee_grid{};

  // learner
  double eta = 5e-4;
  double alpha = 1e-4;
  std::vector<std::pair<double, double>> coeff_profiles{
      {6.0, 0.2}, {3.0, 0.7}, {1.5, 1.5}, {0.7, 3.0}, {0.2, 6.0}};
  double slip_scale = 1.0;
  double liab_scale = 4.0;

  // signal accounting (reference profile for the ledger and regret report)
  double signal_a = 1.5;
  double signal_b = 1.5;

  // engine
  double weight_floor = 1e-12;
  double solver_tol = 1e-8;
  int solver_max_iters = 200;

  // regimes: directional (R1), small oscillation (R2), large oscillation
  // (R3), directional (R4), with settle phases between that ramp the
  // inventory linearly back to neutral.
  int r1_rounds = 400, r2_rounds = 400, r3_rounds = 400, r4_rounds = 400;
  double r1_amplitude = 1.0, r2_amplitude = 0.25, r3_amplitude = 5.0, r4_amplitude = 1.0;
  int transition_rounds = 20;
  double amplitude_jitter = 0.0;  // relative, drawn uniform in [-j, j] per trade

  // regret report comparator budget
  int switch_budget = 3;

  void validate() const {
    if (liquidity.size() < 1) throw std::invalid_argument("config: need at least one expert");
    for (double b : liquidity)
      if (!(b > 0.0)) throw std::invalid_argument("config: liquidity scales must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("config: beta must be > 0");
    if (fee_variant != "global" && fee_variant != "restricted" && fee_variant != "pathwise")
      throw std::invalid_argument("config: unknown fee variant '" + fee_variant + "'");
    fee_grid.validate();
    if (!(eta > 0.0)) throw std::invalid_argument("config: eta must be > 0");
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("config: alpha must be in [0, 1]");
    if (coeff_profiles.empty()) throw std::invalid_argument("config: need coefficient profiles");
    for (const auto& [a, b] : coeff_profiles)
      if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("config: profile coefficients must be > 0");
    if (!(slip_scale > 0.0) || !(liab_scale > 0.0))
      throw std::invalid_argument("config: signal scales must be > 0");
    if (signal_a < 0.0 || signal_b < 0.0)
      throw std::invalid_argument("config: signal weights must be >= 0");
    if (!(solver_tol > 0.0) || solver_max_iters < 1)
      throw std::invalid_argument("config: bad solver options");
    if (r1_rounds < 1 || r2_rounds < 1 || r3_rounds < 1 || r4_rounds < 1 ||
        transition_rounds < 0)
      throw std::invalid_argument("config: regime lengths must be positive");
    if (!(amplitude_jitter >= 0.0) || amplitude_jitter >= 1.0)
      throw std::invalid_argument("config: amplitude jitter must be in [0, 1)");
    if (switch_budget < 0) throw std::invalid_argument("config: switch budget must be >= 0");
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument("config: unknown key '" + where + item.key() + "'");
  }
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline SimConfig sim_config_from_json(const nlohmann::json& j) {
  using detail::maybe;
  SimConfig c;
  detail::reject_unknown_keys(
      j, {"market", "fee", "learner", "signals", "engine", "solver", "regimes", "regret"}, "");

  if (j.contains("market")) {
    const auto& m = j.at("market");
    detail::reject_unknown_keys(m, {"liquidity", "beta"}, "market.");
    maybe(m, "liquidity", c.liquidity);
    maybe(m, "beta", c.beta);
  }
  if (j.contains("fee")) {
    const auto& f = j.at("fee");
    detail::reject_unknown_keys(f, {"variant", "grid"}, "fee.");
    maybe(f, "variant", c.fee_variant);
    if (f.contains("grid")) {
      const auto& g = f.at("grid");
      detail::reject_unknown_keys(g, {"lo", "hi", "count"}, "fee.grid.");
      maybe(g, "lo", c.fee_grid.lo);
      maybe(g, "hi", c.fee_grid.hi);
      maybe(g, "count", c.fee_grid.count);
    }
  }
  if (j.contains("learner")) {
    const auto& l = j.at("learner");
    detail::reject_unknown_keys(
        l, {"eta", "alpha", "coeff_profiles", "slip_scale", "liab_scale"}, "learner.");
    maybe(l, "eta", c.eta);
    maybe(l, "alpha", c.alpha);
    maybe(l, "coeff_profiles", c.coeff_profiles);
    maybe(l, "slip_scale", c.slip_scale);
    maybe(l, "liab_scale", c.liab_scale);
  }
  if (j.contains("signals")) {
    const auto& s = j.at("signals");
    detail::reject_unknown_keys(s, {"a", "b"}, "signals.");
    maybe(s, "a", c.signal_a);
    maybe(s, "b", c.signal_b);
  }
  if (j.contains("engine")) {
    const auto& e = j.at("engine");
    detail::reject_unknown_keys(e, {"weight_floor"}, "engine.");
    maybe(e, "weight_floor", c.weight_floor);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    detail::reject_unknown_keys(s, {"tol", "max_iters"}, "solver.");
    maybe(s, "tol", c.solver_tol);
    maybe(s, "max_iters", c.solver_max_iters);
  }
  if (j.contains("regimes")) {
    const auto& r = j.at("regimes");
    detail::reject_unknown_keys(
        r,
        {"r1_rounds", "r2_rounds", "r3_rounds", "r4_rounds", "r1_amplitude", "r2_amplitude",
         "r3_amplitude", "r4_amplitude", "transition_rounds", "amplitude_jitter"},
        "regimes.");
    maybe(r, "r1_rounds", c.r1_rounds);
    maybe(r, "r2_rounds", c.r2_rounds);
    maybe(r, "r3_rounds", c.r3_rounds);
    maybe(r, "r4_rounds", c.r4_rounds);
    maybe(r, "r1_amplitude", c.r1_amplitude);
    maybe(r, "r2_amplitude", c.r2_amplitude);
    maybe(r, "r3_amplitude", c.r3_amplitude);
    maybe(r, "r4_amplitude", c.r4_amplitude);
    maybe(r, "transition_rounds", c.transition_rounds);
    maybe(r, "amplitude_jitter", c.amplitude_jitter);
  }
  if (j.contains("regret")) {
    const auto& r = j.at("regret");
    detail::reject_unknown_keys(r, {"switch_budget"}, "regret.");
    maybe(r, "switch_budget", c.switch_budget);
  }
  c.validate();
  return c;
}

inline nlohmann::json sim_config_to_json(const SimConfig& c) {
  nlohmann::json j;
  j["market"] = {{"liquidity", c.liquidity}, {"beta", c.beta}};
  j["fee"] = {{"variant", c.fee_variant},
              {"grid", {{"lo", c.fee_grid.lo}, {"hi", c.fee_grid.hi}, {"count", c.fee_grid.count}}}};
  j["learner"] = {{"eta", c.eta},
                  {"alpha", c.alpha},
                  {"coeff_profiles", c.coeff_profiles},
                  {"slip_scale", c.slip_scale},
                  {"liab_scale", c.liab_scale}};
  j["signals"] = {{"a", c.signal_a}, {"b", c.signal_b}};
  j["engine"] = {{"weight_floor", c.weight_floor}};
  j["solver"] = {{"tol", c.solver_tol}, {"max_iters", c.solver_max_iters}};
  j["regimes"] = {{"r1_rounds", c.r1_rounds},       {"r2_rounds", c.r2_rounds},
                  {"r3_rounds", c.r3_rounds},       {"r4_rounds", c.r4_rounds},
                  {"r1_amplitude", c.r1_amplitude}, {"r2_amplitude", c.r2_amplitude},
                  {"r3_amplitude", c.r3_amplitude}, {"r4_amplitude", c.r4_amplitude},
                  {"transition_rounds", c.transition_rounds},
                  {"amplitude_jitter", c.amplitude_jitter}};
  j["regret"] = {{"switch_budget", c.switch_budget}};
  return j;
}

inline SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config: failed to parse '" + path + "': " + e.what());
  }
  return sim_config_from_json(j);
}

}  // namespace mixmarket
