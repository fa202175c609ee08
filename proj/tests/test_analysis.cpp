#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lcsim/analysis.hpp"

using namespace lcsim;

namespace {

Execution make_exec(std::vector<uint32_t> h, std::vector<uint32_t> a) {
  Execution e;
  e.honest_counts = std::move(h);
  e.adversarial_counts = std::move(a);
  return e;
}

// Random executions for oracle-equivalence sweeps (Poisson mode, varied rates).
Execution random_exec(uint64_t seed, uint32_t horizon) {
  ProtocolParams pp;
  pp.lottery_mode = LotteryMode::Poisson;
  pp.seed = seed;
  pp.horizon = horizon;
  pp.rho = 0.2 + 2.3 * (double(seed % 7) / 7.0);
  pp.beta = 0.45 * (double(seed % 5) / 5.0);
  return sample_execution(pp);
}

}  // namespace

TEST_CASE("pivot: all-uniquely-successful execution makes every slot a pivot") {
  Execution e = make_exec({1, 1, 1, 1, 1}, {0, 0, 0, 0, 0});
  for (uint32_t t = 1; t <= 5; ++t) {
    CHECK(check_pivot(e, t));
    CHECK(check_pivot_naive(e, t));
  }
}

TEST_CASE("pivot: hand-enumerated [U,U,A,U,U]") {
  Execution e = make_exec({1, 1, 0, 1, 1}, {0, 0, 2, 0, 0});
  CHECK(check_pivot(e, 1));
  // (2,4] holds one uniquely successful and one adversarial slot: U > N fails.
  CHECK(!check_pivot(e, 4));
  CHECK(check_pivot_naive(e, 1));
  CHECK(!check_pivot_naive(e, 4));
}

TEST_CASE("pivot: an N>U window covering t disqualifies it") {
  Execution e = make_exec({0, 1, 0, 0}, {3, 0, 0, 0});
  // (0,2] has N=1, U=1: not U>N, not N=0, so even slot 2 is no pivot.
  CHECK(!check_pivot(e, 2));
  CHECK(!check_pivot_naive(e, 2));
}

TEST_CASE("freq-pivots: gamma = horizon with one unique pivot anywhere") {
  Execution e = make_exec({0, 1, 0, 0, 0}, {0, 0, 0, 0, 0});
  CHECK(check_freq_pivots(e, 5));
  CHECK(check_freq_pivots_naive(e, 5));
}

TEST_CASE("freq-pivots: all-adversarial execution fails for every gamma") {
  Execution e = make_exec({0, 0, 0, 0}, {2, 1, 3, 1});
  for (uint32_t g = 1; g <= 4; ++g) {
    CHECK(!check_freq_pivots(e, g));
    CHECK(!check_freq_pivots_naive(e, g));
  }
}

TEST_CASE("short-prefixes: [U,A,A] needs K >= 3") {
  Execution e = make_exec({1, 0, 0}, {0, 1, 1});
  CHECK(check_short_prefixes(e, 3));
  CHECK(!check_short_prefixes(e, 2));
  CHECK(check_short_prefixes_naive(e, 3));
  CHECK(!check_short_prefixes_naive(e, 2));
}

TEST_CASE("short-prefixes: genesis anchors executions without unique slots") {
  // All three slots are adversarial, so the only unique anchor is genesis:
  // the worst window is N(0,3] = 3, which needs K >= 4.
  Execution e = make_exec({0, 2, 0}, {1, 0, 2});
  CHECK(!check_short_prefixes(e, 3));
  CHECK(check_short_prefixes(e, 4));
  CHECK(!check_short_prefixes_naive(e, 3));
  CHECK(check_short_prefixes_naive(e, 4));
  Execution u = make_exec({1, 1, 1}, {0, 0, 0});
  CHECK(check_short_prefixes(u, 1));
  CHECK(check_short_prefixes_naive(u, 1));
}

TEST_CASE("W: [U,A,A,U] has W_{3,3} = 2, and W_{s,t} <= W_{t,t}") {
  Execution e = make_exec({1, 0, 0, 1}, {0, 1, 1, 0});
  CHECK(compute_w(e, 3, 3) == 2);
  CHECK(compute_w_naive(e, 3, 3) == 2);
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Execution r = random_exec(seed, 40);
    for (uint32_t t = 1; t <= 40; t += 3)
      for (uint32_t s = 1; s <= t; s += 2) CHECK(compute_w(r, s, t) <= compute_w(r, t, t));
  }
}

TEST_CASE("few-long-chains: trivial without adversarial slots") {
  Execution e = make_exec({1, 0, 1, 1}, {0, 0, 0, 0});
  CHECK(check_few_long_chains(e, 1));
  CHECK(check_few_long_chains_naive(e, 1));
}

TEST_CASE("oracle equivalence on random executions") {
  // Production implementations vs naive definitional recounts.
  Rng rng(substream(99, StreamPurpose::Adversary));
  for (uint64_t seed = 1; seed <= 200; ++seed) {
    uint32_t T = 10 + uint32_t(seed % 51);  // 10..60
    Execution e = random_exec(seed, T);
    // pivot at a handful of slots
    for (int i = 0; i < 4; ++i) {
      uint32_t t = 1 + uint32_t(rng.next_below(T));
      CHECK(check_pivot(e, t) == check_pivot_naive(e, t));
    }
    // short prefixes / few long chains at assorted K
    for (uint32_t k : {1u, 2u, 4u, 8u}) {
      CHECK(check_short_prefixes(e, k) == check_short_prefixes_naive(e, k));
      CHECK(check_few_long_chains(e, k) == check_few_long_chains_naive(e, k));
    }
    // W at random (s,t)
    for (int i = 0; i < 4; ++i) {
      uint32_t t = 1 + uint32_t(rng.next_below(T));
      uint32_t s = 1 + uint32_t(rng.next_below(t));
      CHECK(compute_w(e, s, t) == compute_w_naive(e, s, t));
    }
    // freq pivots at a random gamma
    uint32_t g = 1 + uint32_t(rng.next_below(T));
    CHECK(check_freq_pivots(e, g) == check_freq_pivots_naive(e, g));
  }
}

TEST_CASE("bound_short_prefixes equals an independent re-derivation") {
  ProtocolParams pp;
  pp.rho = 0.05;
  pp.beta = 0.25;
  pp.num_nodes = 20;
  pp.horizon = 100000;
  BoundParams bp;
  bp.epsilon1 = 0.1;
  bp.epsilon2 = 1.0;
  bp.t_window = 5000;
  double got = bound_short_prefixes(pp, bp);
  // Straight-line re-derivation.
  double p = 1 - std::exp(-0.05);
  double pu = 0.75 * 0.05 * std::exp(-0.05);
  double pa = p - pu;
  double alpha2 = std::min(0.1 * 0.1 / 36.0, 1.0 / 3.0 * pa / p);
  double expect = 2.0 * 1e5 * 1e5 * std::exp(-alpha2 * p * 5000.0);
  expect = std::min(1.0, expect);
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("bounds decay to zero as the window grows") {
  ProtocolParams pp;
  pp.rho = 0.1;
  pp.beta = 0.0;
  pp.horizon = 1000;
  BoundParams bp;
  bp.epsilon1 = 0.9;
  bp.epsilon2 = 5.0;
  bp.t_window = 1e7;
  CHECK(bound_short_prefixes(pp, bp) < 1e-30);
  CHECK(bound_few_long_chains(pp, bp, Alpha3Reading::MaxOfTerms) < 1e-30);
  bp.t_window = 10;
  CHECK(bound_short_prefixes(pp, bp) == 1.0);  // clamped
}

TEST_CASE("bound domain checks") {
  ProtocolParams pp;
  BoundParams bp;
  bp.epsilon1 = 0.0;
  CHECK_THROWS_AS(bound_short_prefixes(pp, bp), std::domain_error);
  bp.epsilon1 = 1.0;
  CHECK_THROWS_AS(bound_few_long_chains(pp, bp, Alpha3Reading::MaxOfTerms),
                  std::domain_error);
  bp.epsilon1 = 1.5;
  CHECK_THROWS_AS(bound_freq_pivots(pp, bp), std::domain_error);
}

TEST_CASE("alpha3 readings: max reading gives the tighter (smaller) bound") {
  ProtocolParams pp;
  pp.rho = 0.2;
  pp.beta = 0.1;
  pp.num_nodes = 20;
  pp.horizon = 5000;
  BoundParams bp;
  bp.epsilon1 = 0.3;
  bp.t_window = 3000;
  double bmax = bound_few_long_chains(pp, bp, Alpha3Reading::MaxOfTerms);
  double bmin = bound_few_long_chains(pp, bp, Alpha3Reading::MinOfTerms);
  CHECK(bmax <= bmin);
}

TEST_CASE("bound_freq_pivots reports consistent internals") {
  ProtocolParams pp;
  pp.rho = 0.1;
  pp.beta = 0.0;
  pp.horizon = 200;
  BoundParams bp;
  bp.epsilon1 = 0.9;
  bp.kappa = 20;
  FreqPivotsBound fb = bound_freq_pivots(pp, bp);
  CHECK(fb.w >= 2 * fb.v);  // w = max(..., 2v)
  CHECK(fb.bound >= 0.0);
  CHECK(fb.bound <= 1.0);
  CHECK(fb.gamma > 0.0);
  // Supplying gamma overrides the derived one.
  bp.gamma = 500.0;
  FreqPivotsBound fb2 = bound_freq_pivots(pp, bp);
  CHECK(fb2.gamma == 500.0);
  CHECK(fb2.w == fb.w);
}

TEST_CASE("Monte Carlo dominance: empirical failures never exceed informative bounds") {
  // Lemma-3-style configuration: K = p_a T (1+eps2) at a window T large
  // enough to push the bound below 0.5; the empirical failure frequency of
  // ShortPrefixes_K over sampled executions must stay below it.
  ProtocolParams pp;
  pp.rho = 0.1;
  pp.beta = 0.0;
  pp.horizon = 200;
  pp.lottery_mode = LotteryMode::Poisson;
  DerivedConstants d = derive_constants(pp);
  BoundParams bp;
  bp.epsilon1 = 2 * d.p_u / d.p - 1;  // security condition tight
  bp.epsilon2 = 5.0;
  bp.t_window = 10000;
  double bound = bound_short_prefixes(pp, bp);
  REQUIRE(bound < 0.5);
  uint32_t K = uint32_t(std::ceil(d.p_a * bp.t_window * (1 + bp.epsilon2)));
  int fails = 0;
  int n = 300;
  for (uint64_t s = 1; s <= uint64_t(n); ++s) {
    pp.seed = s;
    if (!check_short_prefixes(sample_execution(pp), K)) ++fails;
  }
  CHECK(double(fails) / n <= bound);
}

TEST_CASE("solve_rho: root with tiny residual, validated by grid scan") {
  auto rho = solve_rho(1.0 / 3.0, 0.1);
  REQUIRE(rho.has_value());
  auto resid = [](double beta, double e1, double r) {
    return (1 - beta) * r * std::exp(-r) - (1 - std::exp(-r)) / 2 * (1 + e1);
  };
  CHECK(std::fabs(resid(1.0 / 3.0, 0.1, *rho)) < 1e-12);
  // Dense scan: the sign change brackets the root within one cell.
  double lo = 0, hi = 0;
  int cells = 100000;
  for (int i = 1; i <= cells; ++i) {
    double a = 1.0 * (i - 1) / cells, b = 1.0 * i / cells;
    if (resid(1.0 / 3.0, 0.1, a) > 0 && resid(1.0 / 3.0, 0.1, b) <= 0) {
      lo = a;
      hi = b;
      break;
    }
  }
  REQUIRE(hi > 0);
  CHECK(*rho >= lo);
  CHECK(*rho <= hi);
}

TEST_CASE("solve_rho: none when epsilon1 >= 1 - 2 beta") {
  CHECK(!solve_rho(1.0 / 3.0, 0.4).has_value());
  CHECK(!solve_rho(0.25, 0.5).has_value());
  CHECK(solve_rho(0.25, 0.49).has_value());
  CHECK_THROWS_AS(solve_rho(0.6, 0.1), std::domain_error);
  CHECK_THROWS_AS(solve_rho(0.1, 1.2), std::domain_error);
}

TEST_CASE("solve_rho boundary: rho -> 0 as epsilon1 -> (1-2 beta)-") {
  double beta = 0.2;
  double lim = 1 - 2 * beta;
  auto r1 = solve_rho(beta, lim - 0.1);
  auto r2 = solve_rho(beta, lim - 0.01);
  auto r3 = solve_rho(beta, lim - 0.001);
  REQUIRE(r1.has_value());
  REQUIRE(r2.has_value());
  REQUIRE(r3.has_value());
  CHECK(*r2 < *r1);
  CHECK(*r3 < *r2);
  CHECK(*r3 < 0.01);
}

TEST_CASE("throughput formulas at the reference point") {
  ProtocolParams pp;
  pp.rho = 0.06;
  pp.beta = 0.33;
  pp.num_nodes = 100;
  pp.budget_k = 4;
  ThroughputBounds tb = throughput_bounds(pp, 1);
  // Fully independent evaluation.
  double p = 1 - std::exp(-0.06);
  double pu = 0.67 * 0.06 * std::exp(-0.06);
  CHECK(tb.theta == doctest::Approx(2 * pu - p).epsilon(1e-12));
  CHECK(tb.theta == doctest::Approx(0.0174824).epsilon(1e-4));
  CHECK(tb.phi_p == doctest::Approx(p).epsilon(1e-12));
  CHECK(tb.phi_idle == doctest::Approx(pu * (1 - p) / p).epsilon(1e-12));
  CHECK(tb.phi_idle == doctest::Approx(0.61224).epsilon(1e-4));
  CHECK(tb.tp_m == tb.theta);  // m = 1
  double eps1 = 2 * pu / p - 1;
  CHECK(tb.tp_floor == doctest::Approx((1 - p) * eps1 / 2 * 4).epsilon(1e-12));
  // m scales the aggregate line rate.
  CHECK(throughput_bounds(pp, 7).tp_m == doctest::Approx(7 * tb.theta).epsilon(1e-12));
}

TEST_CASE("theta vanishes as the security condition tightens") {
  // theta = p*eps1 at the implied slack: as eps1 -> 0 (rho at the critical
  // point), committed throughput goes to zero.
  double beta = 0.25;
  auto rho = solve_rho(beta, 1e-6);
  REQUIRE(rho.has_value());
  ProtocolParams pp;
  pp.rho = *rho;
  pp.beta = beta;
  pp.num_nodes = 20;
  ThroughputBounds tb = throughput_bounds(pp, 1);
  CHECK(std::fabs(tb.theta) < 1e-6);
}
