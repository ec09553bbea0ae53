// Command-line front end: regime simulation, property checks, fee
// evaluation, price-map inversion, upside scans, and tracking-bound
// experiments.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixmarket/config.hpp"
#include "mixmarket/engine.hpp"
#include "mixmarket/learner.hpp"
#include "mixmarket/sim.hpp"
#include "mixmarket/verify.hpp"

namespace {

using namespace mixmarket;

SimConfig load_or_default(const std::string& path) {
  if (path.empty()) return SimConfig{};
  return load_sim_config(path);
}

MixtureSpec mixture_from_config(const SimConfig& cfg) {
  auto market = MarketDef::arrow_debreu(2);
  std::vector<CostExpert> experts;
  for (double b : cfg.liquidity) experts.push_back(CostExpert::lmsr(market, b));
  return MixtureSpec(std::move(experts), cfg.beta);
}

Vec parse_vector(const std::vector<double>& values, const char* what, int expected = -1) {
  if (expected >= 0 && static_cast<int>(values.size()) != expected)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(expected) +
                                " comma-separated values");
  Vec v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_path,
                 bool dump_config) {
  const SimConfig cfg = load_or_default(config_path);
  if (dump_config) {
    std::cout << sim_config_to_json(cfg).dump(2) << "\n";
    return 0;
  }
  const SimResult res = run_simulation(cfg, seed);
  if (out_path.empty() || out_path == "-") {
    emit_csv(res.records, std::cout);
  } else {
    write_csv(res.records, out_path);
    std::fprintf(stderr, "wrote %zu rounds to %s\n", res.records.size(), out_path.c_str());
  }
  std::fprintf(stderr,
               "fee reserve %.6f, surrogate regret %.6f, realized regret %.6f, "
               "decomposition %s\n",
               res.fee_reserve, res.report.surrogate_regret, res.report.realized_regret,
               res.report.decomposition_ok ? "ok" : "VIOLATED");
  return 0;
}

int cmd_check(std::uint64_t seed) {
  int failed = 0, index = 0;
  for (const auto& r : verify::run_all(seed)) {
    ++index;
    std::printf("[%s] %d. %s — %s\n", r.pass ? "PASS" : "FAIL", index, r.name.c_str(),
                r.detail.c_str());
    if (!r.pass) ++failed;
  }
  std::printf("%d/%d checks passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}

int cmd_fee_grid(const std::string& config_path, const std::vector<double>& w_old,
                 const std::vector<double>& w_new) {
  const SimConfig cfg = load_or_default(config_path);
  const MixtureSpec spec = mixture_from_config(cfg);
  const Vec a = parse_vector(w_old, "--w-old", spec.num_experts());
  const Vec b = parse_vector(w_new, "--w-new", spec.num_experts());
  FeeGrid grid(spec, cfg.fee_grid);
  std::printf("global fee: %.12g\n", grid.fee(a, b));
  Vec origin = Vec::Zero(2);
  std::printf("pathwise fee at q=0: %.12g\n", fee_pathwise(spec, origin, a, b));
  return 0;
}

int cmd_solve_price(const std::string& config_path, const std::vector<double>& target,
                    const std::vector<double>& weights, double tol) {
  const SimConfig cfg = load_or_default(config_path);
  const MixtureSpec spec = mixture_from_config(cfg);
  const Vec p = parse_vector(target, "--target", 2);
  Vec w;
  if (weights.empty())
    w = Vec::Constant(spec.num_experts(), 1.0 / spec.num_experts());
  else
    w = parse_vector(weights, "--weights", spec.num_experts());
  const SolveResult res =
      solve_state_for_price(spec, w, p, SolverOptions{tol, cfg.solver_max_iters});
  std::printf("q = (%.10g, %.10g)\n", res.q[0], res.q[1]);
  std::printf("residual %.3g after %d iterations (%s)\n", res.residual, res.iters,
              res.converged ? "converged" : "NOT converged");
  return res.converged ? 0 : 1;
}

int cmd_upside(const std::string& config_path, int outcome, const std::vector<double>& direction,
               double f0, double f1, double f2, double s_max, int steps) {
  const SimConfig cfg = load_or_default(config_path);
  const MixtureSpec spec = mixture_from_config(cfg);
  const Vec v = parse_vector(direction, "--direction", 2);
  const Vec w = Vec::Constant(spec.num_experts(), 1.0 / spec.num_experts());
  std::vector<double> s_grid;
  for (int i = 1; i <= steps; ++i) s_grid.push_back(s_max * i / steps);
  const auto run = upside_scan(spec, Vec::Zero(2), w, outcome, v, s_grid, f0, f1, f2);
  if (run)
    std::printf("profitable interval: s in [%.6g, %.6g]\n", run->s_min, run->s_max);
  else
    std::printf("no profitable trade size on the grid\n");
  return 0;
}

int cmd_regret(int horizon, int experts, int switches, int trials, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto uniform = [&]() { return (gen() >> 11) * 0x1.0p-53; };
  const double bound = tracking_bound(horizon, experts, switches, 1.0);
  const LearnerConfig cfg{tuned_eta(horizon, experts, switches, 1.0),
                          tuned_alpha(horizon, switches), 1.0};
  double worst = -1.0, total = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Mat losses(horizon, experts);
    for (int t = 0; t < horizon; ++t)
      for (int k = 0; k < experts; ++k) losses(t, k) = uniform();
    const double regret = run_fixed_share(losses, cfg, true).weighted_total -
                          best_switching_comparator(losses, switches).total;
    worst = std::max(worst, regret);
    total += regret;
  }
  std::printf("T=%d M=%d J=%d: bound %.4f, mean regret %.4f, worst %.4f over %d trials\n",
              horizon, experts, switches, bound, total / trials, worst, trials);
  return worst <= bound ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive cost-function mixture market simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  std::uint64_t seed = 42;
  bool dump_config = false;
  auto* simulate = app.add_subcommand("simulate", "run the regime simulation, emit CSV");
  simulate->add_option("-c,--config", config_path, "JSON config file");
  simulate->add_option("-s,--seed", seed, "random seed")->capture_default_str();
  simulate->add_option("-o,--output", out_path, "output CSV path ('-' for stdout)");
  simulate->add_flag("--dump-config", dump_config, "print the effective config and exit");

  std::uint64_t check_seed = 1;
  auto* check = app.add_subcommand("check", "run the property suites, exit nonzero on failure");
  check->add_option("-s,--seed", check_seed, "random seed")->capture_default_str();

  std::vector<double> w_old, w_new;
  auto* fee = app.add_subcommand("fee-grid", "switch fee for a weight update");
  fee->add_option("-c,--config", config_path, "JSON config file");
  fee->add_option("--w-old", w_old, "weights before the update")->required()->delimiter(',');
  fee->add_option("--w-new", w_new, "weights after the update")->required()->delimiter(',');

  std::vector<double> target, weights;
  double tol = 1e-8;
  auto* solve = app.add_subcommand("solve-price", "find the state quoting a target price");
  solve->add_option("-c,--config", config_path, "JSON config file");
  solve->add_option("--target", target, "target price vector")->required()->delimiter(',');
  solve->add_option("--weights", weights, "mixture weights (default uniform)")->delimiter(',');
  solve->add_option("--tol", tol, "price residual tolerance")->capture_default_str();

  int outcome = 0, steps = 400;
  double f0 = 0.0, f1 = 0.0, f2 = 0.0, s_max = 20.0;
  std::vector<double> direction{1.0, 0.0};
  auto* upside = app.add_subcommand("upside", "scan trade sizes for positive realized profit");
  upside->add_option("-c,--config", config_path, "JSON config file");
  upside->add_option("--outcome", outcome, "outcome index")->capture_default_str();
  upside->add_option("--direction", direction, "trade direction")->delimiter(',');
  upside->add_option("--f0", f0, "fixed fee")->capture_default_str();
  upside->add_option("--f1", f1, "linear fee coefficient")->capture_default_str();
  upside->add_option("--f2", f2, "quadratic fee coefficient")->capture_default_str();
  upside->add_option("--s-max", s_max, "largest trade size")->capture_default_str();
  upside->add_option("--steps", steps, "grid resolution")->capture_default_str();

  int horizon = 256, experts = 5, switches = 2, trials = 50;
  std::uint64_t regret_seed = 7;
  auto* regret = app.add_subcommand("regret", "random-loss tracking-bound experiment");
  regret->add_option("-T,--horizon", horizon, "rounds")->capture_default_str();
  regret->add_option("-M,--experts", experts, "experts")->capture_default_str();
  regret->add_option("-J,--switches", switches, "comparator switch budget")->capture_default_str();
  regret->add_option("--trials", trials, "number of random loss arrays")->capture_default_str();
  regret->add_option("-s,--seed", regret_seed, "random seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(config_path, seed, out_path, dump_config);
    if (check->parsed()) return cmd_check(check_seed);
    if (fee->parsed()) return cmd_fee_grid(config_path, w_old, w_new);
    if (solve->parsed()) return cmd_solve_price(config_path, target, weights, tol);
    if (upside->parsed()) return cmd_upside(config_path, outcome, direction, f0, f1, f2, s_max, steps);
    if (regret->parsed()) return cmd_regret(horizon, experts, switches, trials, regret_seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
