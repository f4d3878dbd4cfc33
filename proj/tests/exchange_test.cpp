#include "impacteq/exchange.hpp"

#include <gtest/gtest.h>

#include <random>

namespace impacteq {
namespace {

const TargetPrior kExamplePrior{Marginal::uniform(50.0, 55.0), Marginal::point(50.0)};

// (8/5) lambda/(1+c1) [y^4/4 - k y^3/3]_k^sqrt(2.5)
double expected_profit_antiderivative(double c1, double lambda) {
  const double k = std::sqrt(2.0 * lambda * (1.0 + c1) / (1.0 + 2.0 * c1));
  const double top = std::sqrt(2.5);
  if (k >= top) return 0.0;
  const auto F = [k](double y) { return y * y * y * y / 4.0 - k * y * y * y / 3.0; };
  return 1.6 * lambda / (1.0 + c1) * (F(top) - F(k));
}

TEST(ProfitTest, SpotValue) {
  const auto spec = twap_example_spec();
  EXPECT_NEAR(profit(spec, deviations({52.5, 50.0}), 0.05), 0.0896447, 1e-6);
  EXPECT_NEAR(twap_profit_closed_form(1.25, 0.0, 0.05), 0.0896447, 1e-6);
}

TEST(ProfitTest, EngineMatchesClosedForm) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> a1(50.0, 60.0), c(-0.45, 4.0), fee(1e-3, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double c1 = c(rng);
    const auto dev = deviations({a1(rng), 50.0});
    const double lambda = fee(rng);
    EXPECT_NEAR(profit(twap_example_spec(c1), dev, lambda),
                twap_profit_closed_form(dev.A1, c1, lambda), 1e-9)
        << "c1=" << c1 << " A1=" << dev.A1 << " lambda=" << lambda;
  }
}

TEST(ProfitTest, ClosedFormDomain) {
  EXPECT_EQ(twap_profit_closed_form(0.0, 0.0, 0.1), 0.0);
  EXPECT_EQ(twap_profit_closed_form(-1.0, 0.0, 0.1), 0.0);
  EXPECT_THROW(twap_profit_closed_form(1.0, -0.5, 0.1), ContractViolation);
  EXPECT_THROW(twap_profit_closed_form(1.0, 0.0, 0.0), ContractViolation);
}

TEST(ProfitTest, VanishesAboveDeterrenceBound) {
  auto spec = twap_example_spec(0.7);
  spec.kappa = Schedule::step({{0.0, 1.0}, {0.3, 2.5}});
  const auto dev = deviations({47.0, 55.0});
  const double bound = deterrence_fee_bound(spec, dev);
  EXPECT_NEAR(bound, 2.0 * 4.0 * (0.3 + 0.7 * 2.5), 1e-9);
  EXPECT_EQ(profit(spec, dev, bound * (1.0 + 1e-9)), 0.0);
  EXPECT_EQ(profit(spec, dev, 2.0 * bound), 0.0);
  EXPECT_GT(profit(spec, dev, 0.02 * bound), 0.0);
}

TEST(ProfitTest, LipschitzBoundHolds) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> a1(40.0, 60.0), c(-0.4, 3.0), fee(1e-3, 4.0);
  for (int trial = 0; trial < 300; ++trial) {
    auto spec = twap_example_spec(c(rng));
    if (trial % 2) spec.gamma = Schedule::linear({{0.0, 0.1}, {0.5, 0.3}, {1.0, 0.9}});
    const auto dev = deviations({a1(rng), 50.0});
    double l1 = fee(rng), l2 = fee(rng);
    if (l1 > l2) std::swap(l1, l2);
    if (l2 - l1 < 1e-6) continue;
    const double L = profit_lipschitz_constant(spec, dev, l1, l2);
    EXPECT_LE(std::abs(profit(spec, dev, l1) - profit(spec, dev, l2)), L * (l2 - l1) + 1e-12);
  }
}

TEST(ExpectedProfitTest, QuadratureMatchesAntiderivative) {
  for (double c1 : {0.0, 0.5, 1.0, 2.0}) {
    for (double lambda : {1e-3, 0.05, 0.369, 0.8, 1.9}) {
      EXPECT_NEAR(expected_profit_quadrature_example(c1, lambda),
                  expected_profit_antiderivative(c1, lambda), 1e-10);
    }
  }
  EXPECT_EQ(expected_profit_quadrature_example(0.0, 2.5), 0.0);
  EXPECT_NEAR(expected_profit_quadrature_example(0.0, 0.37), 0.2810091, 1e-6);
}

TEST(ExpectedProfitTest, MonteCarloAgreesWithQuadrature) {
  const auto spec = twap_example_spec(0.0);
  for (double lambda : {0.1, 0.37, 1.0}) {
    const auto mc = expected_profit_mc(spec, kExamplePrior, lambda, 100000, 4);
    const double exact = expected_profit_quadrature_example(0.0, lambda);
    EXPECT_GT(mc.stderr_, 0.0);
    EXPECT_LE(std::abs(mc.estimate - exact), 3.0 * mc.stderr_) << "lambda=" << lambda;
  }
}

TEST(ExpectedProfitTest, PointPriorIsExact) {
  const auto spec = twap_example_spec(0.5);
  const auto prior = TargetPrior::point({52.5, 50.0});
  const auto mc = expected_profit_mc(spec, prior, 0.05, 1000, 9);
  EXPECT_EQ(mc.estimate, profit(spec, deviations({52.5, 50.0}), 0.05));
  EXPECT_EQ(mc.stderr_, 0.0);
}

TEST(ExpectedProfitTest, SeededAndThreadIndependent) {
  const auto spec = twap_example_spec(1.0);
  const TargetPrior prior{Marginal::normal(52.0, 3.0), Marginal::point(49.0)};
  const auto a = expected_profit_mc(spec, prior, 0.3, 5000, 11, 1);
  const auto b = expected_profit_mc(spec, prior, 0.3, 5000, 11, 4);
  const auto c = expected_profit_mc(spec, prior, 0.3, 5000, 12, 1);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.stderr_, b.stderr_);
  EXPECT_NE(a.estimate, c.estimate);
}

TEST(ExpectedProfitTest, CurveUsesCommonDraws) {
  const auto spec = twap_example_spec(0.0);
  const std::vector<double> lambdas{0.1, 0.2, 0.3};
  CurveOptions opts;
  opts.samples = 2000;
  opts.seed = 5;
  const auto curve = profit_curve(spec, kExamplePrior, lambdas, opts);
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    EXPECT_EQ(curve.values[k], expected_profit_mc(spec, kExamplePrior, lambdas[k], 2000, 5).estimate);
  }
  const std::vector<double> unsorted{0.2, 0.1};
  EXPECT_THROW(profit_curve(spec, kExamplePrior, unsorted, opts), ContractViolation);
}

TEST(ExpectedProfitTest, QuadratureIsRestrictedToTheExample) {
  auto spec = twap_example_spec(0.0);
  EXPECT_TRUE(matches_quadrature_example(spec, kExamplePrior));
  spec.horizon = 2.0;
  spec.gamma = Schedule::twap(2.0);
  EXPECT_FALSE(matches_quadrature_example(spec, kExamplePrior));
  CurveOptions opts;
  opts.method = ProfitMethod::quadrature;
  const std::vector<double> lambdas{0.1};
  EXPECT_THROW(profit_curve(spec, kExamplePrior, lambdas, opts), ContractViolation);
}

TEST(ExpectedProfitTest, DeviationMoments) {
  const auto m = deviation_moments(kExamplePrior);
  EXPECT_NEAR(m.mean_abs, 1.25, 0.01);
  EXPECT_NEAR(m.second, 6.25 / 3.0, 0.02);
  EXPECT_NEAR(m.quantile_999, 2.5 * 0.999, 0.01);
}

TEST(OptimalFeeTest, QuadratureOptimaMatchBruteForce) {
  // Maximizers and maxima of E[Profit] on a 10^6-point lambda grid.
  const struct {
    double c1, lambda_hat, value;
  } frozen[] = {{0.0, 0.369498, 0.281009},
                {0.5, 0.492663, 0.249786},
                {1.0, 0.554246, 0.210757},
                {2.0, 0.615828, 0.156116}};
  FeeSearch search;
  search.curve.method = ProfitMethod::quadrature;
  double prev_lambda = 0.0;
  double prev_value = std::numeric_limits<double>::infinity();
  for (const auto& row : frozen) {
    const auto opt = optimal_fee(twap_example_spec(row.c1), kExamplePrior, search);
    EXPECT_EQ(opt.method, "quadrature-exact");
    EXPECT_FALSE(opt.flat);
    EXPECT_NEAR(opt.lambda_hat, row.lambda_hat, 5e-6) << "c1=" << row.c1;
    EXPECT_NEAR(opt.value, row.value, 2e-6) << "c1=" << row.c1;
    EXPECT_GT(opt.lambda_hat, prev_lambda);
    EXPECT_LT(opt.value, prev_value);
    prev_lambda = opt.lambda_hat;
    prev_value = opt.value;
  }
}

TEST(OptimalFeeTest, MonteCarloFindsTheSameFee) {
  FeeSearch search;
  search.curve.samples = 10000;
  search.curve.seed = 3;
  const auto opt = optimal_fee(twap_example_spec(0.0), kExamplePrior, search);
  EXPECT_EQ(opt.method, "grid+golden");
  EXPECT_NEAR(opt.lambda_hat, 0.3695, 0.01);
  EXPECT_NEAR(opt.value, 0.2810, 0.005);
  EXPECT_GT(opt.evaluations, search.coarse_points);
}

TEST(OptimalFeeTest, PointPriorMatchesSingleTargetOptimum) {
  // For one A1 the revenue 2(lambda A/(1+c1) - lambda^{3/2} sqrt(2A/((1+c1)(1+2c1))))
  // peaks at lambda = 2A(1+2c1)/(9(1+c1)).
  const auto prior = TargetPrior::point({53.0, 50.0});
  const auto opt = optimal_fee(twap_example_spec(1.0), prior);
  EXPECT_NEAR(opt.lambda_hat, 2.0 * 1.5 * 3.0 / (9.0 * 2.0), 1e-5);
}

TEST(OptimalFeeTest, ZeroDeviationIsFlat) {
  const auto opt = optimal_fee(twap_example_spec(0.0), TargetPrior::point({50.0, 50.0}));
  EXPECT_TRUE(opt.flat);
  EXPECT_TRUE(std::isnan(opt.lambda_hat));
  ASSERT_FALSE(opt.warnings.empty());
  EXPECT_NE(opt.warnings[0].find("flat"), std::string::npos);
}

}  // namespace
}  // namespace impacteq
