#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "mixmarket/signals.hpp"

using namespace mixmarket;
using testutil::vec2;

namespace {

MixtureSpec reference() {
  auto market = MarketDef::arrow_debreu(2);
  return MixtureSpec({CostExpert::lmsr(market, 1.0), CostExpert::lmsr(market, 12.0)}, 1.0);
}

const SignalCoeffs kRaw{1.0, 1.0, 1.0, 1.0};

}  // namespace

TEST_CASE("slippage values") {
  auto market = MarketDef::arrow_debreu(2);
  auto low = CostExpert::lmsr(market, 1.0);
  auto high = CostExpert::lmsr(market, 12.0);
  CHECK(slippage(low, vec2(3, 1), vec2(3, 1)) == 0.0);
  // log(e+1) - log 2 - 1/2
  CHECK(slippage(low, Vec::Zero(2), vec2(1, 0)) ==
        Catch::Approx(0.1201145069582775).margin(1e-12));
  // higher liquidity takes less price impact on the same trade
  const double s12 = slippage(high, Vec::Zero(2), vec2(1, 0));
  CHECK(s12 == Catch::Approx(0.010413653979549737).margin(1e-12));
  CHECK(s12 < slippage(low, Vec::Zero(2), vec2(1, 0)));
}

TEST_CASE("slippage is a nonnegative Bregman divergence") {
  testutil::Rng rng(7);
  auto ad = MarketDef::arrow_debreu(3);
  auto pb = MarketDef::pair_betting(3);
  for (int i = 0; i < 400; ++i) {
    const bool pair = i % 2 == 0;
    const CostExpert e = pair ? CostExpert::pair_betting(pb, rng.uniform(0.5, 3.0))
                              : CostExpert::lmsr(ad, rng.uniform(0.5, 12.0));
    const int d = e.market().dim;
    const Vec a = rng.vector(d, -4, 4);
    const Vec b = rng.vector(d, -4, 4);
    CHECK(slippage(e, a, b) >= -1e-12);
  }
}

TEST_CASE("hybrid signal") {
  // centering removes the common slippage level
  Vec s = vec2(0.1201145069582775, 0.010413653979549737);
  Vec l = vec2(0.0, 0.0);
  Vec gamma = hybrid_signal(s, l, kRaw);
  CHECK(gamma[0] == Catch::Approx(0.05485042648936389).margin(1e-12));
  CHECK(gamma[1] == Catch::Approx(-0.05485042648936389).margin(1e-12));

  // identical experts: only the liability term survives
  Vec same = vec2(0.3, 0.3);
  Vec liab = vec2(0.8, 0.8);
  gamma = hybrid_signal(same, liab, kRaw);
  CHECK(gamma[0] == Catch::Approx(0.8).margin(1e-15));
  CHECK(gamma[1] == Catch::Approx(0.8).margin(1e-15));

  // zero slippage coefficient leaves the pure liability signal
  gamma = hybrid_signal(s, vec2(0.4, 0.9), SignalCoeffs{0.0, 2.0, 1.0, 1.0});
  CHECK(gamma[0] == Catch::Approx(0.8).margin(1e-15));
  CHECK(gamma[1] == Catch::Approx(1.8).margin(1e-15));

  CHECK_THROWS_AS(hybrid_signal(s, Vec::Zero(3), kRaw), std::invalid_argument);
  CHECK_THROWS_AS(hybrid_signal(s, l, SignalCoeffs{1.0, 1.0, 0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("centered slippage terms sum to zero") {
  testutil::Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const int m = 2 + rng.index(4);
    const Vec s = rng.vector(m, 0.0, 2.0);
    const Vec l = rng.vector(m, 0.0, 2.0);
    const SignalCoeffs c{rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0), 1.0, 1.0};
    const Vec gamma = hybrid_signal(s, l, c);
    double resid = 0.0;
    for (int k = 0; k < m; ++k) resid += gamma[k] - c.b_eff() * l[k];
    CHECK(std::abs(resid) <= 1e-12);
  }
}

TEST_CASE("surrogate signal") {
  const Vec gamma = vec2(0.05485042648936389, -0.05485042648936389);
  CHECK(surrogate_signal(vec2(0.5, 0.5), gamma) == Catch::Approx(0.0).margin(1e-15));
  CHECK(surrogate_signal(vec2(1.0, 0.0), gamma) == gamma[0]);
  CHECK(surrogate_signal(vec2(0.25, 0.75), gamma) ==
        Catch::Approx(-0.027425213244681947).margin(1e-12));
  CHECK_THROWS_AS(surrogate_signal(Vec::Ones(3) / 3.0, gamma), std::invalid_argument);
}

TEST_CASE("mixed signal collapses for one expert") {
  auto market = MarketDef::arrow_debreu(2);
  MixtureSpec one({CostExpert::lmsr(market, 1.0)}, 1.0);
  const Vec w = Vec::Ones(1);
  const Vec q0 = Vec::Zero(2);
  const Vec q1 = vec2(1, 0);
  Vec s(1);
  s << slippage(one.experts[0], q0, q1);
  Vec l(1);
  l << one.experts[0].liability(q1);
  const double gm = mixed_signal(one, q0, q1, w, s, kRaw);
  CHECK(gm == Catch::Approx(hybrid_signal(s, l, kRaw)[0]).margin(1e-12));

  CHECK(mixed_signal(one, q0, q0, w, Vec::Zero(1), kRaw) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("bridge errors vanish in degenerate cases") {
  MixtureSpec spec = reference();
  const Vec w = vec2(0.3, 0.7);
  const Vec q = vec2(0.4, -0.2);
  std::vector<Vec> grads{spec.experts[0].price(q), spec.experts[1].price(q)};
  auto [e1, e2] = bridge_errors(spec, q, q, w, Vec::Zero(2), grads);
  CHECK(e1 == 0.0);
  CHECK(e2 == 0.0);

  // identical experts keep pi = w at every state
  auto market = MarketDef::arrow_debreu(2);
  MixtureSpec same({CostExpert::lmsr(market, 2.0), CostExpert::lmsr(market, 2.0)}, 1.0);
  const Vec qn = vec2(1.2, 0.1);
  std::vector<Vec> g2{same.experts[0].price(q), same.experts[1].price(q)};
  Vec s(2);
  s << slippage(same.experts[0], q, qn), slippage(same.experts[1], q, qn);
  auto [f1, f2] = bridge_errors(same, q, qn, w, s, g2);
  CHECK(std::abs(f1) <= 1e-12);
  CHECK(std::abs(f2) <= 1e-12);
}

TEST_CASE("bridge inequality and slippage bound on random rounds") {
  MixtureSpec spec = reference();
  testutil::Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Vec q_prev = rng.vector(2, -4, 4);
    const Vec q_next = q_prev + rng.vector(2, -2, 2);
    const Vec w = rng.simplex(2);
    const RoundSignals s =
        compute_round_signals(spec, q_prev, q_next, w, rng.simplex(2), 0.0, kRaw);
    CHECK(s.gamma_mix <= s.gamma_surr + s.e1 + s.e2 + 1e-9);
    const Vec pi_next = anchored_posterior(spec, q_next, w);
    CHECK(s.slip_mix_anchored <= pi_next.dot(s.slip) + s.e2 + 1e-9);
    CHECK(s.liab_mix_anchored <= w.dot(s.liab) + 1e-9);
    CHECK(s.slip_mix_anchored >= -1e-12);  // still a Bregman divergence
  }
}

TEST_CASE("anchoring matters for the mixed liability") {
  // with unequal C_k(0) the pricing-potential liability can exceed the
  // weighted expert liabilities; the anchored form never does
  MixtureSpec spec = reference();
  const Vec w = vec2(0.5, 0.5);
  const Vec q = vec2(4.0, 0.0);
  Vec liab(2);
  liab << spec.experts[0].liability(q), spec.experts[1].liability(q);
  CHECK(mixed_liability(spec, q, w) > w.dot(liab) + 0.1);
  CHECK(anchored_mixed_liability(spec, q, w) <= w.dot(liab) + 1e-9);
  // anchored mixture vanishes at the origin
  CHECK(anchored_mix_cost(spec, Vec::Zero(2), w) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("realized signal") {
  MixtureSpec spec = reference();
  const Vec q = vec2(0.5, 0.0);
  const Vec w = vec2(0.5, 0.5);
  CHECK(realized_signal(0.37, spec, q, w, w, 0.0, kRaw) == 0.37);

  // moving mass toward the pointwise larger expert raises the potential
  const Vec w_up = vec2(0.3, 0.7);
  CHECK(realized_signal(0.0, spec, q, w, w_up, 0.0, kRaw) > 0.0);

  // per-round transfer inequality
  testutil::Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const Vec q_prev = rng.vector(2, -4, 4);
    const Vec q_next = q_prev + rng.vector(2, -2, 2);
    const Vec w_t = rng.simplex(2);
    const Vec w_next = rng.simplex(2);
    const double fee = rng.uniform(0.0, 0.5);
    const RoundSignals s = compute_round_signals(spec, q_prev, q_next, w_t, w_next, fee, kRaw);
    CHECK(s.gamma_realized <= s.gamma_surr + std::abs(s.e1) + s.e2 +
                                  std::max(s.wgrad_dot, 0.0) + fee + 1e-9);
  }
}

TEST_CASE("l1 dominance bound") {
  CHECK(l1_dominance_bound(vec2(0.5, 0.5), vec2(0.5, 0.5), 0) >= 0.0);
  CHECK(l1_dominance_bound(vec2(1, 0), vec2(0, 1), 0) == Catch::Approx(2.0).margin(1e-15));
  CHECK((vec2(1, 0) - vec2(0, 1)).lpNorm<1>() == 2.0);
  CHECK(l1_dominance_bound(vec2(0.9, 0.1), vec2(0.8, 0.2), 0) ==
        Catch::Approx(0.6).margin(1e-15));
  CHECK_THROWS_AS(l1_dominance_bound(vec2(0.5, 0.5), vec2(0.5, 0.5), 2), std::invalid_argument);
  CHECK_THROWS_AS(l1_dominance_bound(vec2(0.6, 0.6), vec2(0.5, 0.5), 0), std::invalid_argument);

  testutil::Rng rng(19);
  for (int i = 0; i < 10000; ++i) {
    const int n = 2 + rng.index(5);
    const Vec u = rng.simplex(n);
    const Vec v = rng.simplex(n);
    const double l1 = (u - v).lpNorm<1>();
    for (int j = 0; j < n; ++j) CHECK(l1 <= l1_dominance_bound(u, v, j) + 1e-12);
  }
}

TEST_CASE("round signals carry scaled coefficients consistently") {
  MixtureSpec spec = reference();
  const SignalCoeffs scaled{1.5, 1.5, 1.0, 4.0};
  const Vec q0 = Vec::Zero(2);
  const Vec q1 = vec2(1, 0);
  const Vec w = vec2(0.5, 0.5);
  const RoundSignals s = compute_round_signals(spec, q0, q1, w, w, 0.0, scaled);
  // gamma_hyb = 1.5 (S - mean S) + (1.5/4) L
  const Vec expect = 1.5 * (s.slip.array() - s.slip.mean()).matrix() + 0.375 * s.liab;
  CHECK((s.gamma_hyb - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK(s.gamma_realized == Catch::Approx(s.gamma_mix).margin(1e-12));  // no update, no fee
}
