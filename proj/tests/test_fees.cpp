#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "mixmarket/fees.hpp"

using namespace mixmarket;
using testutil::vec2;

namespace {

MixtureSpec reference() {
  auto market = MarketDef::arrow_debreu(2);
  return MixtureSpec({CostExpert::lmsr(market, 1.0), CostExpert::lmsr(market, 12.0)}, 1.0);
}

std::vector<Vec> grid_states(const GridSpec& g) {
  std::vector<Vec> out;
  out.reserve(g.count);
  for (int i = 0; i < g.count; ++i) out.push_back(vec2(g.point(i), 0.0));
  return out;
}

}  // namespace

TEST_CASE("global fee is zero for identical weights") {
  MixtureSpec spec = reference();
  FeeGrid grid(spec, GridSpec{});
  CHECK(grid.fee(vec2(0.5, 0.5), vec2(0.5, 0.5)) == 0.0);
}

TEST_CASE("shifting mass toward the pointwise larger cost is free") {
  // C_12 dominates C_1 everywhere, so the new mixture dominates the old one
  MixtureSpec spec = reference();
  FeeGrid grid(spec, GridSpec{});
  CHECK(grid.fee(vec2(0.5, 0.5), vec2(0.0, 1.0)) == 0.0);
  CHECK(grid.fee(vec2(0.9, 0.1), vec2(0.5, 0.5)) == 0.0);
}

TEST_CASE("global fee for a shift toward low liquidity") {
  MixtureSpec spec = reference();
  FeeGrid grid(spec, GridSpec{});
  const double fee = grid.fee(vec2(0.5, 0.5), vec2(0.9, 0.1));
  // the difference is maximal at x = 0: log 2049 - log(0.9*2 + 0.1*4096)
  const double at_zero = std::log(2049.0) - std::log(0.9 * 2.0 + 0.1 * 4096.0);
  CHECK(at_zero == Catch::Approx(1.6055411710200430).margin(1e-12));
  CHECK(fee >= at_zero - 1e-12);
  CHECK(fee == Catch::Approx(at_zero).margin(1e-9));
}

TEST_CASE("pathwise fee") {
  MixtureSpec spec = reference();
  const Vec q0 = Vec::Zero(2);
  CHECK(fee_pathwise(spec, q0, vec2(0.5, 0.5), vec2(0.5, 0.5)) == 0.0);
  CHECK(fee_pathwise(spec, q0, vec2(0.5, 0.5), vec2(0.9, 0.1)) ==
        Catch::Approx(1.6055411710200430).margin(1e-12));

  // single grid point never beats the grid max
  FeeGrid grid(spec, GridSpec{});
  testutil::Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const Vec w_old = rng.simplex(2);
    const Vec w_new = rng.simplex(2);
    const double x = grid.grid().point(rng.index(grid.grid().count));
    const double shift = rng.uniform(-5.0, 5.0);  // translation leaves differences unchanged
    CHECK(fee_pathwise(spec, vec2(x + shift, shift), w_old, w_new) <=
          grid.fee(w_old, w_new) + 1e-9);
  }
}

TEST_CASE("restricted fee") {
  MixtureSpec spec = reference();
  const GridSpec g{};
  const auto states = grid_states(g);
  FeeGrid grid(spec, g);
  testutil::Rng rng(17);
  for (int i = 0; i < 10; ++i) {
    const Vec w_old = rng.simplex(2);
    const Vec w_new = rng.simplex(2);
    // full grid region coincides with the global fee
    CHECK(fee_restricted(spec, w_old, w_new, states) ==
          Catch::Approx(grid.fee(w_old, w_new)).margin(1e-12));
    // single point region equals the pathwise fee there
    std::vector<Vec> single{Vec::Zero(2)};
    CHECK(fee_restricted(spec, w_old, w_new, single) ==
          Catch::Approx(fee_pathwise(spec, Vec::Zero(2), w_old, w_new)).margin(1e-15));
    // subsets can only shrink the fee
    std::vector<Vec> subset(states.begin() + 1000, states.begin() + 3000);
    CHECK(fee_restricted(spec, w_old, w_new, subset) <= grid.fee(w_old, w_new) + 1e-12);
  }
}

TEST_CASE("fees are nonnegative") {
  MixtureSpec spec = reference();
  FeeGrid grid(spec, GridSpec{});
  testutil::Rng rng(19);
  for (int i = 0; i < 200; ++i) {
    const Vec w_old = rng.simplex(2);
    const Vec w_new = rng.simplex(2);
    CHECK(grid.fee(w_old, w_new) >= 0.0);
    CHECK(fee_pathwise(spec, rng.vector(2, -10, 10), w_old, w_new) >= 0.0);
  }
}

TEST_CASE("fee dominates the potential decrease on every grid state") {
  MixtureSpec spec = reference();
  FeeGrid grid(spec, GridSpec{-140.0, 140.0, 801});
  testutil::Rng rng(23);
  for (int i = 0; i < 30; ++i) {
    const Vec w_old = rng.simplex(2);
    const Vec w_new = rng.simplex(2);
    const double fee = grid.fee(w_old, w_new);
    for (int p = 0; p < 801; p += 25) {
      const Vec q = vec2(grid.grid().point(p), 0.0);
      CHECK(mix_cost(spec, q, w_old) <= mix_cost(spec, q, w_new) + fee + 1e-9);
    }
  }
}

TEST_CASE("fee is stable under grid refinement") {
  MixtureSpec spec = reference();
  FeeGrid coarse(spec, GridSpec{-140.0, 140.0, 5001});
  FeeGrid fine(spec, GridSpec{-140.0, 140.0, 10001});
  testutil::Rng rng(29);
  for (int i = 0; i < 20; ++i) {
    const Vec w_old = rng.simplex(2);
    const Vec w_new = rng.simplex(2);
    CHECK(std::abs(coarse.fee(w_old, w_new) - fine.fee(w_old, w_new)) < 1e-3);
  }
}

TEST_CASE("fee configuration guards") {
  MixtureSpec spec = reference();
  CHECK_THROWS_AS(FeeGrid(spec, GridSpec{-1.0, 1.0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(FeeGrid(spec, GridSpec{5.0, -5.0, 100}), std::invalid_argument);
  CHECK_THROWS_AS(fee_restricted(spec, vec2(0.5, 0.5), vec2(0.5, 0.5), {}),
                  std::invalid_argument);

  // the grid reduction is only valid for binary LMSR mixtures
  auto pair_market = MarketDef::pair_betting(3);
  MixtureSpec pair_spec({CostExpert::pair_betting(pair_market, 1.0)}, 1.0);
  CHECK_THROWS_AS(FeeGrid(pair_spec, GridSpec{}), std::invalid_argument);
  auto k3 = MarketDef::arrow_debreu(3);
  MixtureSpec k3_spec({CostExpert::lmsr(k3, 1.0)}, 1.0);
  CHECK_THROWS_AS(FeeGrid(k3_spec, GridSpec{}), std::invalid_argument);
}
