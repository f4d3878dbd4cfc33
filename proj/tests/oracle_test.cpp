#include "impacteq/oracle.hpp"

#include <gtest/gtest.h>

#include <random>

namespace impacteq {
namespace {

const Deviations kDev = deviations({52.5, 50.0});

// V of a constant position c for kappa = 1, gamma(t) = t, T = 1, from antiderivatives.
double constant_strategy_oracle(double c1, double n, double mean, double A, double lambda,
                                double c) {
  const double k = (1.0 + 2.0 * c1) / (1.0 + c1);
  const double gap = 2.0 * A;  // a_sigma - n when A2 = -A1 and a2 = n/2
  const double s0 = mean + 0.5 * (gap / 2.0 - c1 * n);
  const double own = 2.0 * A;  // a1 - n/2 when a2 = n/2
  const double penalty = n * n / 4.0 + n * own / 2.0 + own * own / 3.0;
  const double alpha_int = (c1 + 0.5) * n + k * A / 2.0;
  return 0.5 * n * s0 - 0.5 * penalty + c * alpha_int - (c1 + 0.5) * c * c -
         lambda * std::abs(c - n / 2.0);
}

TEST(ObjectiveTest, ConstantStrategyMatchesClosedForm) {
  for (double c1 : {0.0, 0.5, 2.0}) {
    const auto spec = twap_example_spec(c1, 100.0);
    const auto grid = uniform_grid(1.0, 16);
    for (double c : {50.0, 50.4, 51.7, 48.0}) {
      Strategy s{grid, std::vector<double>(grid.size(), c), 50.0};
      EXPECT_NEAR(objective(spec, kDev, 1, s, 0.05),
                  constant_strategy_oracle(c1, 100.0, 100.0, 1.25, 0.05, c), 1e-8)
          << "c1=" << c1 << " c=" << c;
    }
  }
}

TEST(ObjectiveTest, RoundTripOnlyCostsFees) {
  const auto spec = twap_example_spec(0.0, 100.0);
  const auto grid = uniform_grid(1.0, 8);
  Strategy hold{grid, std::vector<double>(grid.size(), 50.0), 50.0};
  Strategy round_trip = hold;
  round_trip.values[3] = 51.0;  // buy 1 at t=3/8, sell back at t=4/8
  const double v_hold = objective(spec, kDev, 1, hold, 0.05);
  const double v_trip = objective(spec, kDev, 1, round_trip, 0.05);
  EXPECT_LT(v_trip, v_hold + 1.0);
  EXPECT_EQ(round_trip.turnover(), 2.0);
  // Same trip with zero fee: the difference is the running term alone.
  const double free_gain =
      objective(spec, kDev, 1, round_trip, 1e-300) - objective(spec, kDev, 1, hold, 1e-300);
  EXPECT_NEAR(v_trip - v_hold, free_gain - 2.0 * 0.05, 1e-9);
}

TEST(ObjectiveTest, EquilibriumBeatsHoldingTheEndowment) {
  const auto spec = twap_example_spec(0.0, 100.0);
  const auto sol = solve(spec, kDev, 0.05);
  const auto eq = discretize_equilibrium(sol, 256);
  Strategy hold{eq.grid, std::vector<double>(eq.grid.size(), 50.0), 50.0};
  EXPECT_GE(objective(spec, kDev, 1, eq, 0.05), objective(spec, kDev, 1, hold, 0.05));
}

TEST(ObjectiveTest, DiscretizedEquilibriumValues) {
  const auto sol = solve(twap_example_spec(0.0, 100.0), kDev, 0.05);
  const auto s = discretize_equilibrium(sol, 4);
  const std::vector<double> expected{50.0, 50.3125, 50.625, 50.89645, 50.89645};
  ASSERT_EQ(s.values.size(), expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(s.values[k], expected[k], 1e-4);
  EXPECT_NEAR(s.turnover(), 0.89645, 1e-4);
}

TEST(ObjectiveTest, OneDimensionalSlicesAreConcave) {
  const auto spec = twap_example_spec(0.5, 100.0);
  const Objective v(spec, kDev, 1, uniform_grid(1.0, 12), 0.05);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> level(47.0, 53.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(13);
    for (auto& e : x) e = level(rng);
    const std::size_t k = static_cast<std::size_t>(trial % 13);
    const auto at = [&](double value) {
      auto y = x;
      y[k] = value;
      return v(std::span<const double>(y));
    };
    const double p = level(rng);
    const double q = level(rng);
    EXPECT_GE(at(0.5 * (p + q)) + 1e-9, 0.5 * (at(p) + at(q)));
  }
}

TEST(ObjectiveTest, CoordinateArgmaxIsExact) {
  const auto spec = twap_example_spec(0.0, 100.0);
  const Objective v(spec, kDev, 1, uniform_grid(1.0, 6), 0.05);
  std::vector<double> x{50.0, 50.2, 50.9, 51.3, 50.1, 49.7, 50.5};
  for (std::size_t k = 0; k < x.size(); ++k) {
    auto y = x;
    y[k] = v.coordinate_argmax(x, k);
    const double best = v(std::span<const double>(y));
    for (int j = 0; j <= 4000; ++j) {
      auto z = x;
      z[k] = 47.0 + 6.0 * j / 4000.0;
      EXPECT_LE(v(std::span<const double>(z)), best + 1e-10);
    }
  }
}

TEST(OptimalityTest, ExampleConfigurationPasses) {
  const auto spec = twap_example_spec(0.0, 100.0);
  const auto r = verify_optimality(spec, kDev, 0.05, 1, 64, 300, 7);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.n_challengers, 300u + 65u * 8u);
  EXPECT_LE(r.worst_gap, r.tolerance);
}

TEST(OptimalityTest, DiscretizationGapShrinksUnderRefinement) {
  const auto spec = twap_example_spec(0.0, 100.0);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t N : {16u, 32u, 64u, 128u}) {
    const auto r = verify_optimality(spec, kDev, 0.05, 1, N, 10, 3, 1e9);
    EXPECT_LT(r.ascent_gain, 0.5 * previous) << "N=" << N;
    previous = r.ascent_gain;
  }
}

TEST(OptimalityTest, NoTradeAndZeroDeviationAreExact) {
  const auto spec = twap_example_spec(0.0, 100.0);
  const auto no_trade = verify_optimality(spec, kDev, 1.0, 1, 64, 200, 9);
  EXPECT_LE(no_trade.worst_gap, 0.0);
  EXPECT_LE(no_trade.ascent_gain, 0.0);

  const auto zero = verify_optimality(spec, deviations({50.0, 50.0}), 0.05, 2, 64, 200, 9);
  EXPECT_LE(zero.worst_gap, 0.0);
  EXPECT_LE(zero.ascent_gain, 0.0);
}

TEST(OptimalityTest, StepGammaWithTradeStopAtAJump) {
  MarketSpec spec;
  spec.horizon = 2.0;
  spec.supply = 10.0;
  spec.impact = 0.5;
  spec.dividend_mean = 20.0;
  spec.kappa = Schedule::linear({{0.0, 1.0}, {2.0, 3.0}});
  spec.gamma = Schedule::step({{0.0, 0.0}, {0.5, 0.3}, {1.2, 0.8}, {1.8, 1.0}});
  const auto dev = deviations({3.0, 9.0});
  const auto sol = solve(spec, dev, 0.2);
  EXPECT_EQ(sol.tau(), 1.8);
  for (std::size_t N : {64u, 100u}) {
    const auto r = verify_optimality(spec, dev, 0.2, 1, N, 200, 5);
    EXPECT_TRUE(r.passed()) << "N=" << N;
    EXPECT_LE(r.ascent_gain, 1e-9);
  }
}

TEST(OptimalityTest, SecondAgentPasses) {
  const auto spec = twap_example_spec(1.0, 100.0);
  EXPECT_TRUE(verify_optimality(spec, kDev, 0.2, 2, 64, 200, 13).passed());
}

TEST(OptimalityTest, PerturbedCandidateIsCaught) {
  const auto spec = twap_example_spec(0.0, 100.0);
  const auto sol = solve(spec, kDev, 0.05);
  auto candidate = discretize_equilibrium(sol, 64);
  for (std::size_t k = 10; k < 30; ++k) candidate.values[k] += 0.3;
  const Objective value(spec, kDev, 1, candidate.grid, 0.05);
  try {
    verify_candidate(value, candidate, kDev.A1, 50, 1, 0.0);
    FAIL() << "expected OptimalityViolation";
  } catch (const OptimalityViolation& e) {
    EXPECT_GT(e.report().ascent_gain, e.report().tolerance);
    EXPECT_EQ(e.challenger().values.size(), candidate.values.size());
  }
}

TEST(OptimalityTest, SeedDeterminism) {
  const auto spec = twap_example_spec(0.0, 100.0);
  const auto a = verify_optimality(spec, kDev, 0.05, 1, 32, 100, 42, 1e9);
  const auto b = verify_optimality(spec, kDev, 0.05, 1, 32, 100, 42, 1e9);
  EXPECT_EQ(a.worst_gap, b.worst_gap);
  EXPECT_EQ(a.worst_challenger.values, b.worst_challenger.values);
}

TEST(ClearingTest, RandomConfigurations) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> target(0.0, 100.0), fee(0.01, 3.0), c(-0.4, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto sol = solve(twap_example_spec(c(rng)), deviations({target(rng), target(rng)}), fee(rng));
    EXPECT_LE(verify_clearing(sol, 200), 1e-10);
    EXPECT_LE(verify_consistency(sol, 200), 1e-8);
    const auto adj = verify_adjoint(sol, 200);
    EXPECT_LE(adj.max_abs, sol.lambda() * (1.0 + 1e-9) + 1e-12);
    EXPECT_LE(adj.max_pin_error, 1e-8 * (1.0 + sol.lambda()));
  }
}

TEST(WalrasTest, SimulatedPathsClear) {
  auto spec = twap_example_spec(0.5, 100.0);
  spec.sigma = Schedule::constant(2.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto b = simulate(spec, kDev, 0.05, 512, seed);
    const auto r = verify_walras(b);
    EXPECT_LE(r.money / r.scale, 1e-12);
    EXPECT_LE(r.consumption / r.scale, 1e-12);
  }
}

}  // namespace
}  // namespace impacteq
