#include "impacteq/model.hpp"

#include <gtest/gtest.h>

#include <random>

namespace impacteq {
namespace {

TEST(ValidateTest, TwapExampleIsValid) {
  const auto spec = twap_example_spec();
  EXPECT_TRUE(check(spec).empty());
  EXPECT_NO_THROW(validate(spec));
}

TEST(ValidateTest, ImpactBoundaryIsExcluded) {
  auto spec = twap_example_spec(-0.5);
  try {
    validate(spec);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.violations().size(), 1u);
    EXPECT_NE(e.violations()[0].find("c1"), std::string::npos);
  }
  spec.impact = -0.4999;
  EXPECT_NO_THROW(validate(spec));
}

TEST(ValidateTest, DownwardStepInGammaIsRejected) {
  auto spec = twap_example_spec();
  spec.gamma = Schedule::step({{0.0, 0.2}, {0.5, 0.8}, {0.7, 0.6}});
  const auto bad = check(spec);
  ASSERT_FALSE(bad.empty());
  EXPECT_NE(bad[0].find("monotonicity"), std::string::npos);
}

TEST(ValidateTest, GammaOutsideUnitIntervalIsRejected) {
  auto spec = twap_example_spec();
  spec.gamma = Schedule::linear({{0.0, 0.0}, {1.0, 1.2}});
  EXPECT_THROW(validate(spec), ValidationError);
}

TEST(ValidateTest, NonPositiveKappaIsRejected) {
  auto spec = twap_example_spec();
  spec.kappa = Schedule::step({{0.0, 1.0}, {0.4, 0.0}, {0.6, 1.0}});
  const auto bad = check(spec);
  ASSERT_FALSE(bad.empty());
  EXPECT_NE(bad[0].find("positivity"), std::string::npos);
}

TEST(ValidateTest, CollectsEveryScalarViolation) {
  auto spec = twap_example_spec();
  spec.horizon = 0.0;
  spec.supply = -1.0;
  spec.impact = -2.0;
  EXPECT_EQ(check(spec).size(), 3u);
}

TEST(ValidateTest, UnsortedTableIsRejected) {
  auto spec = twap_example_spec();
  spec.kappa = Schedule::step({{0.5, 1.0}, {0.2, 2.0}});
  EXPECT_FALSE(check(spec).empty());
}

TEST(DeviationsTest, Examples) {
  auto d = deviations({52.5, 50.0});
  EXPECT_EQ(d.a_sigma, 102.5);
  EXPECT_EQ(d.A1, 1.25);
  EXPECT_EQ(d.A2, -1.25);

  d = deviations({50.0, 50.0});
  EXPECT_EQ(d.A1, 0.0);
  EXPECT_EQ(d.A2, 0.0);

  d = deviations({0.0, 100.0});
  EXPECT_EQ(d.A1, -50.0);
  EXPECT_EQ(d.A2, 50.0);
}

TEST(DeviationsTest, AlwaysBalanced) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> draw(50.0, 30.0);
  const double n = 100.0;
  for (int k = 0; k < 1000; ++k) {
    const TargetPair targets{draw(rng), draw(rng)};
    const auto d = deviations(targets);
    EXPECT_EQ(d.A1 + d.A2, 0.0);
    EXPECT_NEAR(d.a_sigma - n, (targets.a1 - n / 2) + (targets.a2 - n / 2), 1e-12);
    EXPECT_NEAR(d.target(1), targets.a1, 1e-12);
    EXPECT_NEAR(d.target(2), targets.a2, 1e-12);
  }
}

TEST(ScheduleTest, Evaluation) {
  const auto spec = twap_example_spec();
  EXPECT_EQ(eval_gamma(spec, 0.25), 0.25);
  EXPECT_EQ(eval_kappa(spec, 0.9), 1.0);
  EXPECT_THROW(eval_gamma(spec, 1.5), DomainError);
  EXPECT_THROW(eval_kappa(spec, -0.1), DomainError);

  const auto step = Schedule::step({{0.0, 0.0}, {0.5, 1.0}});
  EXPECT_EQ(step(0.5), 1.0);
  EXPECT_EQ(step(std::nextafter(0.5, 0.0)), 0.0);

  const auto lin = Schedule::linear({{0.2, 0.0}, {0.6, 1.0}});
  EXPECT_EQ(lin(0.0), 0.0);
  EXPECT_DOUBLE_EQ(lin(0.5), 0.75);
  EXPECT_EQ(lin(0.9), 1.0);
  EXPECT_EQ(lin.breakpoints(), (std::vector<double>{0.2, 0.6}));
}

TEST(ScheduleTest, ValidatedGammaIsNondecreasing) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Node> nodes;
    double v = 0.0;
    for (int k = 0; k < 6; ++k) {
      v = std::min(1.0, v + 0.2 * unif(rng));
      nodes.push_back({k / 6.0, v});
    }
    auto spec = twap_example_spec();
    spec.gamma = trial % 2 ? Schedule::step(nodes) : Schedule::linear(nodes);
    ASSERT_NO_THROW(validate(spec));
    double prev = -1.0;
    for (int k = 0; k <= 500; ++k) {
      const double g = eval_gamma(spec, k / 500.0);
      EXPECT_GE(g, prev);
      prev = g;
    }
  }
}

}  // namespace
}  // namespace impacteq
