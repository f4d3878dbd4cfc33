#pragma once

// Exchange-side analytics: fee revenue in equilibrium, its expectation under
// a prior on the trading targets (Monte Carlo or, for the TWAP example,
// one-dimensional quadrature), and the revenue-maximizing fee.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "impacteq/equilibrium.hpp"
#include "impacteq/model.hpp"
#include "impacteq/numerics.hpp"
#include "impacteq/simulate.hpp"

namespace impacteq {

/// Fees collected in equilibrium, 2 lambda |theta_1,T - n/2|.
inline double profit(const MarketSpec& spec, const Deviations& dev, double lambda) {
  return solve(spec, dev, lambda).profit();
}

/// Fee above which no trade happens for any trajectory: 2 |A1| int_0^T kappa.
inline double deterrence_fee_bound(const MarketSpec& spec, const Deviations& dev) {
  const auto bp = spec.kappa.breakpoints();
  return 2.0 * std::abs(dev.A1) *
         integrate(spec.kappa, 0.0, spec.horizon, std::span<const double>(bp));
}

/// Revenue for T = 1, n = 100, kappa = 1, gamma(t) = t:
/// 2 max(0, lambda A1/(1+c1) - lambda sqrt(2 lambda A1 / ((1+c1)(1+2c1)))).
/// Defined for A1 >= 0 only; returns 0 for A1 <= 0.
inline double twap_profit_closed_form(double A1, double c1, double lambda) {
  if (!(c1 > -0.5)) throw ContractViolation("twap_profit_closed_form: c1 must be > -1/2");
  if (!(lambda > 0.0)) throw ContractViolation("twap_profit_closed_form: lambda must be > 0");
  if (!(A1 > 0.0)) return 0.0;
  const double bracket =
      lambda * A1 / (1.0 + c1) - lambda * std::sqrt(2.0 * lambda * A1 / ((1.0 + c1) * (1.0 + 2.0 * c1)));
  return 2.0 * std::max(0.0, bracket);
}

/// Upper bound on |Profit(l1) - Profit(l2)| / |l1 - l2| for lambda_lo <= l1 < l2 <= lambda_hi:
/// 2 (lambda_hi / ((1+2c1) int_{tau(lambda_lo)}^T kappa) + |A1| gamma(T) / (1+c1)).
inline double profit_lipschitz_constant(const MarketSpec& spec, const Deviations& dev,
                                        double lambda_lo, double lambda_hi) {
  const double c1 = spec.impact;
  const double tau = last_trading_time(spec, dev, lambda_lo);
  const auto bp = spec.kappa.breakpoints();
  const double tail = integrate(spec.kappa, tau, spec.horizon, std::span<const double>(bp));
  return 2.0 * (lambda_hi / ((1.0 + 2.0 * c1) * tail) +
                std::abs(dev.A1) * spec.gamma(spec.horizon) / (1.0 + c1));
}

// ---------------------------------------------------------------------------
// Priors

struct Marginal {
  enum class Kind { point, uniform, normal };
  Kind kind = Kind::point;
  double first = 0.0;   // value | lo | mean
  double second = 0.0;  // unused | hi | sd

  static Marginal point(double v) { return {Kind::point, v, 0.0}; }
  static Marginal uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static Marginal normal(double mean, double sd) { return {Kind::normal, mean, sd}; }

  double draw(GaussianStream& stream) const {
    switch (kind) {
      case Kind::point: return first;
      case Kind::uniform: return first + (second - first) * stream.uniform();
      case Kind::normal: return first + second * stream();
    }
    return first;
  }

  friend bool operator==(const Marginal&, const Marginal&) = default;
};

inline const char* to_string(Marginal::Kind k) {
  switch (k) {
    case Marginal::Kind::point: return "point";
    case Marginal::Kind::uniform: return "uniform";
    case Marginal::Kind::normal: return "normal";
  }
  return "?";
}

/// Independent priors for the two targets, independent of the price noise.
struct TargetPrior {
  Marginal a1;
  Marginal a2;

  static TargetPrior point(const TargetPair& t) {
    return {Marginal::point(t.a1), Marginal::point(t.a2)};
  }

  bool degenerate() const {
    return a1.kind == Marginal::Kind::point && a2.kind == Marginal::Kind::point;
  }

  TargetPair draw(GaussianStream& stream) const {
    const double x1 = a1.draw(stream);
    const double x2 = a2.draw(stream);
    return {x1, x2};
  }

  friend bool operator==(const TargetPrior&, const TargetPrior&) = default;
};

/// i.i.d. target draws; draw i depends only on (seed, i).
inline std::vector<TargetPair> draw_targets(const TargetPrior& prior, std::size_t count,
                                            std::uint64_t seed) {
  GaussianStream stream(seed);
  std::vector<TargetPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(prior.draw(stream));
  return out;
}

struct DeviationMoments {
  double mean_abs = 0.0;       // E|A1|
  double second = 0.0;         // E[A1^2]
  double quantile_999 = 0.0;   // 0.999 quantile of |A1|
};

/// Moments of |A1| from 10^5 seeded draws (exact for point priors).
inline DeviationMoments deviation_moments(const TargetPrior& prior, std::uint64_t seed = 1) {
  DeviationMoments m;
  if (prior.degenerate()) {
    GaussianStream unused(seed);
    const double a = std::abs(deviations(prior.draw(unused)).A1);
    return {a, a * a, a};
  }
  constexpr std::size_t kDraws = 100000;
  std::vector<double> abs_dev;
  abs_dev.reserve(kDraws);
  for (const auto& t : draw_targets(prior, kDraws, seed)) {
    const double a = std::abs(deviations(t).A1);
    abs_dev.push_back(a);
    m.mean_abs += a;
    m.second += a * a;
  }
  m.mean_abs /= kDraws;
  m.second /= kDraws;
  const std::size_t q = static_cast<std::size_t>(0.999 * (kDraws - 1));
  std::nth_element(abs_dev.begin(), abs_dev.begin() + q, abs_dev.end());
  m.quantile_999 = abs_dev[q];
  return m;
}

// ---------------------------------------------------------------------------
// Expected profit

struct MonteCarloEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

namespace detail {

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, const Fn& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline MonteCarloEstimate summarize(std::span<const double> samples) {
  const double count = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= count;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double variance = samples.size() > 1 ? ss / (count - 1.0) : 0.0;
  return {mean, std::sqrt(variance / count)};
}

inline MonteCarloEstimate expected_profit_on(const MarketSpec& spec,
                                             std::span<const Deviations> draws, double lambda,
                                             unsigned threads) {
  std::vector<double> values(draws.size());
  parallel_for(draws.size(), threads,
               [&](std::size_t i) { values[i] = profit(spec, draws[i], lambda); });
  return summarize(values);
}

inline std::vector<Deviations> deviation_draws(const TargetPrior& prior, std::size_t count,
                                               std::uint64_t seed) {
  std::vector<Deviations> out;
  out.reserve(count);
  for (const auto& t : draw_targets(prior, count, seed)) out.push_back(deviations(t));
  return out;
}

}  // namespace detail

/// Sample mean and standard error of Profit(lambda) over `samples` seeded
/// target draws. A point prior returns (profit, 0) without sampling.
inline MonteCarloEstimate expected_profit_mc(const MarketSpec& spec, const TargetPrior& prior,
                                             double lambda, std::size_t samples,
                                             std::uint64_t seed, unsigned threads = 1) {
  if (samples < 2) throw ContractViolation("expected_profit_mc: needs at least 2 samples");
  if (prior.degenerate()) {
    GaussianStream unused(seed);
    return {profit(spec, deviations(prior.draw(unused)), lambda), 0.0};
  }
  const auto draws = detail::deviation_draws(prior, samples, seed);
  return detail::expected_profit_on(spec, draws, lambda, threads);
}

/// E[Profit(lambda)] for the TWAP example with a1 ~ U(50, 55), a2 = 50:
/// (8/5) int_0^sqrt(2.5) lambda y^2/(1+c1) max(0, y - sqrt(2 lambda (1+c1)/(1+2c1))) dy.
inline double expected_profit_quadrature_example(double c1, double lambda) {
  if (!(c1 > -0.5)) throw ContractViolation("quadrature example: c1 must be > -1/2");
  if (!(lambda > 0.0)) throw ContractViolation("quadrature example: lambda must be > 0");
  const double top = std::sqrt(2.5);
  const double kink = std::sqrt(2.0 * lambda * (1.0 + c1) / (1.0 + 2.0 * c1));
  if (kink >= top) return 0.0;
  const double bp[] = {kink};
  const double scale = 1.6 * lambda / (1.0 + c1);
  return scale * integrate([kink](double y) { return y * y * std::max(0.0, y - kink); }, 0.0, top,
                           std::span<const double>(bp));
}

/// True when (spec, prior) is the configuration the quadrature formula covers.
inline bool matches_quadrature_example(const MarketSpec& spec, const TargetPrior& prior) {
  return spec.horizon == 1.0 && spec.supply == 100.0 &&
         spec.kappa.kind() == ScheduleKind::constant && spec.kappa.scalar() == 1.0 &&
         spec.gamma.kind() == ScheduleKind::twap && spec.gamma.scalar() == 1.0 &&
         prior.a1 == Marginal::uniform(50.0, 55.0) && prior.a2 == Marginal::point(50.0);
}

enum class ProfitMethod { monte_carlo, quadrature };

inline const char* to_string(ProfitMethod m) {
  return m == ProfitMethod::monte_carlo ? "mc" : "quadrature";
}

struct ProfitCurve {
  std::vector<double> lambdas;
  std::vector<double> values;
  std::vector<double> stderrs;
};

struct CurveOptions {
  ProfitMethod method = ProfitMethod::monte_carlo;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

namespace detail {

inline void require_quadrature(const MarketSpec& spec, const TargetPrior& prior) {
  if (!matches_quadrature_example(spec, prior)) {
    throw ContractViolation(
        "quadrature method needs T=1, n=100, kappa=1, TWAP gamma and a1~U(50,55), a2=50");
  }
}

}  // namespace detail

/// E[Profit] on a strictly increasing lambda grid. Monte Carlo uses the same
/// target draws at every lambda.
inline ProfitCurve profit_curve(const MarketSpec& spec, const TargetPrior& prior,
                                std::span<const double> lambdas, const CurveOptions& opts = {}) {
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] > 0.0) || (k > 0 && !(lambdas[k] > lambdas[k - 1]))) {
      throw ContractViolation("profit_curve: lambdas must be positive and strictly increasing");
    }
  }
  ProfitCurve curve;
  curve.lambdas.assign(lambdas.begin(), lambdas.end());
  curve.values.reserve(lambdas.size());
  curve.stderrs.reserve(lambdas.size());
  if (opts.method == ProfitMethod::quadrature) {
    detail::require_quadrature(spec, prior);
    for (double l : lambdas) {
      curve.values.push_back(expected_profit_quadrature_example(spec.impact, l));
      curve.stderrs.push_back(0.0);
    }
    return curve;
  }
  if (prior.degenerate()) {
    for (double l : lambdas) {
      const auto e = expected_profit_mc(spec, prior, l, 2, opts.seed, opts.threads);
      curve.values.push_back(e.estimate);
      curve.stderrs.push_back(0.0);
    }
    return curve;
  }
  const auto draws = detail::deviation_draws(prior, opts.samples, opts.seed);
  for (double l : lambdas) {
    const auto e = detail::expected_profit_on(spec, draws, l, opts.threads);
    curve.values.push_back(e.estimate);
    curve.stderrs.push_back(e.stderr_);
  }
  return curve;
}

struct FeeOptimum {
  double lambda_hat = std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  std::string method;  // "grid+golden" (Monte Carlo) or "quadrature-exact"
  std::size_t evaluations = 0;
  double search_lo = 0.0;
  double search_hi = 0.0;
  bool flat = false;
  std::vector<std::string> warnings;
};

struct FeeSearch {
  CurveOptions curve;
  std::optional<double> lo;  // default: 1e-6 * 2 E|A1| int kappa
  std::optional<double> hi;  // default: 0.999 quantile of 2 |A1| int kappa
  std::size_t coarse_points = 60;
  std::size_t starts = 3;
  double refine_tol = 0.0;   // default: 1e-7 * hi
};

/// Revenue-maximizing fee: coarse grid on E[Profit], then golden section in
/// the brackets around the best `starts` grid nodes. Unimodality is not
/// assumed.
inline FeeOptimum optimal_fee(const MarketSpec& spec, const TargetPrior& prior,
                              const FeeSearch& search = {}) {
  FeeOptimum out;
  const bool quadrature = search.curve.method == ProfitMethod::quadrature;
  if (quadrature) detail::require_quadrature(spec, prior);
  out.method = quadrature ? "quadrature-exact" : "grid+golden";

  const auto moments = deviation_moments(prior, search.curve.seed);
  const auto kbp = spec.kappa.breakpoints();
  const double kappa_total = integrate(spec.kappa, 0.0, spec.horizon, std::span<const double>(kbp));
  const double lo = search.lo.value_or(1e-6 * 2.0 * moments.mean_abs * kappa_total);
  const double hi = search.hi.value_or(2.0 * moments.quantile_999 * kappa_total);
  out.search_lo = lo;
  out.search_hi = hi;
  if (moments.second <= 0.0 || !(lo > 0.0) || !(hi > lo)) {
    out.flat = true;
    out.warnings.push_back("flat objective: the prior puts no mass on trade (E[A1^2] = 0)");
    return out;
  }

  std::vector<Deviations> draws;
  if (!quadrature) {
    if (prior.degenerate()) {
      GaussianStream unused(0);
      draws.push_back(deviations(prior.draw(unused)));
    } else {
      draws = detail::deviation_draws(prior, search.curve.samples, search.curve.seed);
    }
  }
  const auto expected = [&](double lambda) {
    if (quadrature) return expected_profit_quadrature_example(spec.impact, lambda);
    return detail::expected_profit_on(spec, draws, lambda, search.curve.threads).estimate;
  };

  const double tol = search.refine_tol > 0.0 ? search.refine_tol : 1e-7 * hi;
  const auto best = maximize_1d(expected, lo, hi, std::max<std::size_t>(search.coarse_points, 3),
                                tol, search.starts);
  out.evaluations = best.evaluations;
  if (!(best.value > 0.0)) {
    out.flat = true;
    out.value = 0.0;
    out.warnings.push_back("flat objective: expected profit is zero on the whole search grid");
    return out;
  }
  out.lambda_hat = best.argmax;
  out.value = best.value;
  return out;
}

}  // namespace impacteq
