#pragma once

// Independent checks of the equilibrium claims on discretized strategies:
// the conditional objective V_i, brute-force optimality against seeded
// challengers and coordinate ascent, stock/money/consumption clearing, price
// consistency and the adjoint bound.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "impacteq/equilibrium.hpp"
#include "impacteq/model.hpp"
#include "impacteq/numerics.hpp"
#include "impacteq/simulate.hpp"

namespace impacteq {

/// Piecewise-constant, right-continuous holdings: values[k] is held on
/// [grid[k], grid[k+1]); values.back() is the position at T. `initial` is
/// the endowment before any time-0 block trade.
struct Strategy {
  std::vector<double> grid;
  std::vector<double> values;
  double initial = 0.0;

  double turnover() const {
    double total = 0.0;
    double prev = initial;
    for (double v : values) {
      total += std::abs(v - prev);
      prev = v;
    }
    return total;
  }
};

inline std::vector<double> uniform_grid(double horizon, std::size_t intervals) {
  std::vector<double> grid(intervals + 1);
  for (std::size_t k = 0; k <= intervals; ++k) {
    grid[k] = k == intervals ? horizon : horizon * static_cast<double>(k) / intervals;
  }
  return grid;
}

/// V_i(theta) = (n/2) S0 - lambda turnover - 1/2 int kappa (n/2 + gamma (a_i - n/2))^2
///            + int kappa (alpha theta - beta theta^2),
/// alpha(t) = (c1 + 1/2) n + gamma(t) (1+2c1) A_i / (1+c1), beta = c1 + 1/2,
/// evaluated for step strategies on a fixed grid. The zero-mean martingale
/// term of the wealth is dropped.
class Objective {
 public:
  Objective(const MarketSpec& spec, const Deviations& dev, int agent, std::vector<double> grid,
            double lambda)
      : grid_(std::move(grid)), lambda_(lambda), initial_(0.5 * spec.supply) {
    if (grid_.size() < 2) throw ContractViolation("objective: grid needs at least two points");
    if (agent != 1 && agent != 2) throw ContractViolation("objective: agent must be 1 or 2");
    const double n = spec.supply;
    const double c1 = spec.impact;
    const double A = dev.of(agent);
    const double own_gap = dev.target(agent) - 0.5 * n;
    beta_ = c1 + 0.5;
    const auto bp = detail::merged_breakpoints(spec.kappa, spec.gamma);
    const std::span<const double> bps(bp);
    const double T = spec.horizon;

    const auto alpha = [&](double t) {
      return (c1 + 0.5) * n + spec.gamma(t) * impact_factor(c1) * A;
    };
    const double S0 = spec.dividend_mean + price_drift_tail(spec, dev, 0.0);
    const double penalty = integrate(
        [&](double u) {
          const double x = 0.5 * n + spec.gamma(u) * own_gap;
          return spec.kappa(u) * x * x;
        },
        0.0, T, bps);
    constant_ = 0.5 * n * S0 - 0.5 * penalty;

    const std::size_t N = grid_.size() - 1;
    linear_.resize(N);
    quadratic_.resize(N);
    for (std::size_t k = 0; k < N; ++k) {
      const double a = grid_[k];
      const double b = grid_[k + 1];
      linear_[k] = integrate([&](double u) { return spec.kappa(u) * alpha(u); }, a, b, bps);
      quadratic_[k] = beta_ * integrate([&](double u) { return spec.kappa(u); }, a, b, bps);
    }
  }

  const std::vector<double>& grid() const noexcept { return grid_; }
  double constant() const noexcept { return constant_; }
  double initial() const noexcept { return initial_; }

  double operator()(std::span<const double> values) const {
    if (values.size() != grid_.size()) throw ContractViolation("objective: size mismatch");
    double v = constant_;
    double prev = initial_;
    double turnover = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double x = values[k];
      turnover += std::abs(x - prev);
      prev = x;
      if (k < linear_.size()) v += x * linear_[k] - quadratic_[k] * x * x;
    }
    return v - lambda_ * turnover;
  }

  double operator()(const Strategy& s) const { return (*this)(std::span<const double>(s.values)); }

  /// Exact maximizer of V over coordinate k with the others held fixed.
  /// The slice is concave and piecewise quadratic with kinks at the
  /// neighbouring values, so the maximum sits at a kink or at a stationary
  /// point of one piece.
  double coordinate_argmax(std::span<const double> values, std::size_t k) const {
    const double left = k == 0 ? initial_ : values[k - 1];
    const bool has_right = k + 1 < values.size();
    const double right = has_right ? values[k + 1] : 0.0;
    const double a = k < linear_.size() ? linear_[k] : 0.0;
    const double c = k < quadratic_.size() ? quadratic_[k] : 0.0;
    const auto slice = [&](double x) {
      double f = a * x - c * x * x - lambda_ * std::abs(x - left);
      if (has_right) f -= lambda_ * std::abs(right - x);
      return f;
    };
    if (c <= 0.0) return left;

    double best = values[k];
    double best_value = slice(best);
    const auto consider = [&](double x) {
      const double f = slice(x);
      if (f > best_value) {
        best_value = f;
        best = x;
      }
    };
    consider(left);
    if (has_right) consider(right);
    for (double s : {-2.0, -1.0, 0.0, 1.0, 2.0}) consider((a + s * lambda_) / (2.0 * c));
    return best;
  }

 private:
  std::vector<double> grid_;
  double lambda_;
  double initial_;
  double beta_ = 0.0;
  double constant_ = 0.0;
  std::vector<double> linear_;     // int kappa alpha over each bucket
  std::vector<double> quadratic_;  // beta int kappa over each bucket
};

inline double objective(const MarketSpec& spec, const Deviations& dev, int agent,
                        const Strategy& s, double lambda) {
  if (s.grid.size() != s.values.size()) throw ContractViolation("strategy: size mismatch");
  Objective v(spec, dev, agent, s.grid, lambda);
  double value = v(s);
  // A non-default endowment only shifts the turnover term.
  if (s.initial != v.initial()) {
    value += lambda * (std::abs(s.values.front() - v.initial()) -
                       std::abs(s.values.front() - s.initial));
  }
  return value;
}

/// Uniform grid plus the kappa/gamma breakpoints inside (0, T), so that
/// step strategies can follow jumps of the schedules.
inline std::vector<double> strategy_grid(const MarketSpec& spec, std::size_t intervals) {
  auto grid = uniform_grid(spec.horizon, intervals);
  for (double b : detail::merged_breakpoints(spec.kappa, spec.gamma)) {
    if (b > 0.0 && b < spec.horizon) grid.push_back(b);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

/// Equilibrium holdings of `agent` sampled on strategy_grid(spec, N).
inline Strategy discretize_equilibrium(const EquilibriumSolution& sol, std::size_t N,
                                       int agent = 1) {
  if (N < 2) throw ContractViolation("discretize_equilibrium: N must be >= 2");
  Strategy s;
  s.grid = strategy_grid(sol.spec(), N);
  s.initial = 0.5 * sol.spec().supply;
  s.values.reserve(s.grid.size());
  for (double t : s.grid) s.values.push_back(sol.theta(agent, t));
  return s;
}

struct OptimalityReport {
  double v_star = 0.0;
  double worst_gap = -std::numeric_limits<double>::infinity();
  std::size_t n_challengers = 0;
  double ascent_gain = 0.0;
  double tolerance = 0.0;
  std::size_t ascent_sweeps = 0;
  Strategy worst_challenger;

  bool passed() const { return worst_gap <= tolerance && ascent_gain <= tolerance; }
};

class OptimalityViolation : public Error {
 public:
  explicit OptimalityViolation(OptimalityReport report)
      : Error("optimality violated: challenger beats the candidate by " +
              std::to_string(std::max(report.worst_gap, report.ascent_gain))),
        report_(std::move(report)) {}

  const OptimalityReport& report() const noexcept { return report_; }
  const Strategy& challenger() const noexcept { return report_.worst_challenger; }

 private:
  OptimalityReport report_;
};

namespace detail {

inline std::uint64_t challenger_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::vector<double> random_challenger(std::span<const double> candidate, double center,
                                             double half_width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t size = candidate.size();
  const double lo = center - half_width;
  const double hi = center + half_width;
  std::vector<double> v(size);
  switch (seed % 4) {
    case 0:  // independent levels
      for (auto& x : v) x = lo + (hi - lo) * unif(rng);
      break;
    case 1: {  // monotone ramp to a random level, then hold
      const double target = lo + (hi - lo) * unif(rng);
      const double stop = unif(rng);
      for (std::size_t k = 0; k < size; ++k) {
        const double s = std::min(1.0, static_cast<double>(k) / (stop * (size - 1) + 1.0));
        v[k] = center + s * (target - center);
      }
      break;
    }
    case 2: {  // small noise around the candidate
      std::normal_distribution<double> noise(0.0, 1e-3 * half_width);
      for (std::size_t k = 0; k < size; ++k) v[k] = candidate[k] + noise(rng);
      break;
    }
    default: {  // rescaled candidate stopped at a random index
      const double scale = 0.5 + unif(rng);
      const std::size_t stop = static_cast<std::size_t>(unif(rng) * size);
      for (std::size_t k = 0; k < size; ++k) {
        const std::size_t j = std::min(k, stop);
        v[k] = center + scale * (candidate[j] - center);
      }
      break;
    }
  }
  for (auto& x : v) x = std::clamp(x, lo, hi);
  return v;
}

}  // namespace detail

/// Tests a candidate strategy against (a) `trials` seeded random challengers
/// within [n/2 - 2|A1|, n/2 + 2|A1|], (b) single-bucket bumps, and (c) exact
/// coordinate ascent started at the candidate. Throws OptimalityViolation
/// when any challenger beats the candidate by more than `tol`; tol <= 0
/// selects 1e-6 |V*|.
inline OptimalityReport verify_candidate(const Objective& value, const Strategy& candidate,
                                         double deviation, std::size_t trials, std::uint64_t seed,
                                         double tol) {
  const std::span<const double> cand(candidate.values);
  OptimalityReport report;
  report.v_star = value(cand);
  report.tolerance = tol > 0.0 ? tol : 1e-6 * std::abs(report.v_star);

  const double center = value.initial();
  const double half_width = deviation != 0.0 ? 2.0 * std::abs(deviation) : 1.0;
  const auto consider = [&](std::vector<double> values) {
    const double gap = value(std::span<const double>(values)) - report.v_star;
    ++report.n_challengers;
    if (gap > report.worst_gap) {
      report.worst_gap = gap;
      report.worst_challenger = Strategy{candidate.grid, std::move(values), center};
    }
  };

  for (std::size_t j = 0; j < trials; ++j) {
    consider(detail::random_challenger(cand, center, half_width,
                                       detail::challenger_seed(seed, j)));
  }
  for (std::size_t k = 0; k < cand.size(); ++k) {
    for (double scale : {1e-4, 1e-3, 1e-2, 1e-1}) {
      for (double sign : {-1.0, 1.0}) {
        std::vector<double> bumped(cand.begin(), cand.end());
        bumped[k] += sign * scale * half_width;
        consider(std::move(bumped));
      }
    }
  }

  std::vector<double> polished(cand.begin(), cand.end());
  double current = report.v_star;
  constexpr std::size_t kMaxSweeps = 500;
  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double before = current;
    for (std::size_t k = 0; k < polished.size(); ++k) {
      polished[k] = value.coordinate_argmax(polished, k);
    }
    current = value(std::span<const double>(polished));
    report.ascent_sweeps = sweep + 1;
    if (current - before <= 1e-15 * (1.0 + std::abs(current))) break;
  }
  report.ascent_gain = current - report.v_star;
  if (report.ascent_gain > report.worst_gap) {
    report.worst_challenger = Strategy{candidate.grid, polished, center};
  }

  if (!report.passed()) throw OptimalityViolation(report);
  return report;
}

inline OptimalityReport verify_optimality(const MarketSpec& spec, const Deviations& dev,
                                          double lambda, int agent, std::size_t N,
                                          std::size_t trials, std::uint64_t seed,
                                          double tol = 0.0) {
  if (trials < 1) throw ContractViolation("verify_optimality: trials must be >= 1");
  const auto sol = solve(spec, dev, lambda);
  const auto candidate = discretize_equilibrium(sol, N, agent);
  const Objective value(spec, dev, agent, candidate.grid, lambda);
  return verify_candidate(value, candidate, dev.A1, trials, seed, tol);
}

/// max_k |theta1 + theta2 - n| over N+1 uniform grid points.
inline double verify_clearing(const EquilibriumSolution& sol, std::size_t N) {
  double worst = 0.0;
  for (double t : uniform_grid(sol.spec().horizon, N)) {
    const auto h = sol.holdings(t);
    worst = std::max(worst, std::abs(h.theta1 + h.theta2 - sol.spec().supply));
  }
  return worst;
}

/// max |perceived drift at theta_i - equilibrium drift| over grid points in (0, tau).
inline double verify_consistency(const EquilibriumSolution& sol, std::size_t N) {
  double worst = 0.0;
  for (double t : uniform_grid(sol.spec().horizon, N)) {
    if (!(t > 0.0 && t < sol.tau())) continue;
    const double target = sol.equilibrium_drift(t);
    for (int agent : {1, 2}) {
      worst = std::max(worst, std::abs(sol.perceived_drift(agent, sol.theta(agent, t), t) - target));
    }
  }
  return worst;
}

struct AdjointAudit {
  double max_abs = 0.0;        // max |Y_i,t|
  double max_pin_error = 0.0;  // max |Y_i,t - lambda sgn A_i| on [0, tau] when trading
};

inline AdjointAudit verify_adjoint(const EquilibriumSolution& sol, std::size_t N) {
  AdjointAudit audit;
  const auto& dev = sol.deviations();
  for (double t : uniform_grid(sol.spec().horizon, N)) {
    const auto y = sol.adjoint(t);
    audit.max_abs = std::max({audit.max_abs, std::abs(y.Y1), std::abs(y.Y2)});
    if (sol.trade_occurs() && t <= sol.tau()) {
      audit.max_pin_error =
          std::max({audit.max_pin_error, std::abs(y.Y1 - sol.lambda() * sgn(dev.A1)),
                    std::abs(y.Y2 - sol.lambda() * sgn(dev.A2))});
    }
  }
  return audit;
}

struct WalrasResidual {
  double money = 0.0;        // max_t |mm1 + mm2 + lambda (turnover1 + turnover2)|
  double consumption = 0.0;  // |(theta1_T + theta2_T) S_T - n D|
  double scale = 1.0;        // n * max(1, max_t |S_t|)
};

inline WalrasResidual verify_walras(const PathBundle& b) {
  WalrasResidual r;
  double price_scale = 1.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double fees = b.lambda * (b.turnover1[k] + b.turnover2[k]);
    r.money = std::max(r.money, std::abs(b.mm1[k] + b.mm2[k] + fees));
    price_scale = std::max(price_scale, std::abs(b.S_hat[k]));
  }
  const std::size_t last = b.size() - 1;
  r.consumption = std::abs((b.theta1[last] + b.theta2[last]) * b.S_hat[last] - b.supply * b.D);
  r.scale = b.supply * price_scale;
  return r;
}

}  // namespace impacteq
