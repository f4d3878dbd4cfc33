#pragma once

// Closed-form price impact equilibrium with proportional transaction costs.
//
// Given the market, the targets and a fee rate lambda, the agents trade
// along n/2 + A_i gamma(t) / (1 + c1) until the last trading time tau and
// hold constant afterwards. Everything below is built from two scalar
// integrals over [tau, T] and is O(1) to query once solved.

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "impacteq/errors.hpp"
#include "impacteq/model.hpp"
#include "impacteq/numerics.hpp"

namespace impacteq {

/// (1 + 2 c1) / (1 + c1): scales every deviation-driven quantity.
inline double impact_factor(double c1) { return (1.0 + 2.0 * c1) / (1.0 + c1); }

/// Drift coefficients of the perceived price:
/// c0(t) = c1 n - (1+2c1)/(2(1+c1)) gamma(t) (a_sigma - n),  c2 = c1 / (1+c1).
struct ImpactCoefficients {
  double c1 = 0.0;
  double c2 = 0.0;
  double supply = 0.0;
  double aggregate_gap = 0.0;  // a_sigma - n
  Schedule gamma;

  double c0(double t) const {
    return c1 * supply - 0.5 * impact_factor(c1) * gamma(t) * aggregate_gap;
  }
};

inline ImpactCoefficients impact_coefficients(const MarketSpec& spec, const Deviations& dev) {
  ImpactCoefficients c;
  c.c1 = spec.impact;
  c.c2 = spec.impact / (1.0 + spec.impact);
  c.supply = spec.supply;
  c.aggregate_gap = dev.a_sigma - spec.supply;
  c.gamma = spec.gamma;
  return c;
}

/// chi = |A1| (1+2c1)/(1+c1) * int_0^T kappa gamma. No trade when chi <= lambda.
inline double deterrence_threshold(const MarketSpec& spec, const Deviations& dev) {
  if (dev.A1 == 0.0) return 0.0;
  const auto bp = detail::merged_breakpoints(spec.kappa, spec.gamma);
  const double integral =
      integrate([&](double u) { return spec.kappa(u) * spec.gamma(u); }, 0.0, spec.horizon,
                std::span<const double>(bp));
  return std::abs(dev.A1) * impact_factor(spec.impact) * integral;
}

/// tau = inf{ t : |A1| (1+2c1)/(1+c1) int_t^T kappa(u) (gamma(u) - gamma(t)) du <= lambda }.
inline double last_trading_time(const MarketSpec& spec, const Deviations& dev, double lambda) {
  if (!(lambda > 0.0)) throw ContractViolation("last_trading_time: lambda must be > 0");
  if (dev.A1 == 0.0) return 0.0;
  const double T = spec.horizon;
  const double scale = std::abs(dev.A1) * impact_factor(spec.impact);
  const auto bp = detail::merged_breakpoints(spec.kappa, spec.gamma);
  const auto incentive = [&](double t) {
    const double gt = spec.gamma(t);
    return scale * integrate([&](double u) { return spec.kappa(u) * (spec.gamma(u) - gt); }, t,
                             T, std::span<const double>(bp));
  };
  const double tol = 1e-12 * T;
  double tau = first_time_below(incentive, lambda, 0.0, T, tol);
  // The incentive jumps down at upward jumps of gamma; bisection then stops a
  // hair after the jump. The infimum is the breakpoint itself.
  for (double b : bp) {
    if (b < tau && b >= tau - 8.0 * tol && incentive(b) <= lambda) {
      tau = b;
      break;
    }
  }
  return tau;
}

/// The effective trajectory gamma~: gamma before tau, a constant level after.
struct EffectiveTrajectory {
  Schedule gamma;
  double tau = 0.0;
  double level = 0.0;

  double operator()(double t) const { return t < tau ? gamma(t) : level; }
};

namespace detail {

struct TailIntegrals {
  double kappa_gamma = 0.0;  // int_tau^T kappa gamma
  double kappa = 0.0;        // int_tau^T kappa
};

inline TailIntegrals tail_integrals(const MarketSpec& spec, double tau) {
  const auto bp = merged_breakpoints(spec.kappa, spec.gamma);
  const auto kbp = spec.kappa.breakpoints();
  TailIntegrals out;
  out.kappa_gamma = integrate([&](double u) { return spec.kappa(u) * spec.gamma(u); }, tau,
                              spec.horizon, std::span<const double>(bp));
  out.kappa = integrate(spec.kappa, tau, spec.horizon, std::span<const double>(kbp));
  return out;
}

inline double terminal_level_from(const MarketSpec& spec, const Deviations& dev, double lambda,
                                  double tau, const TailIntegrals& tail) {
  const double T = spec.horizon;
  if (tau > T - 1e-9 * T) {
    throw InternalConsistencyError("last trading time " + std::to_string(tau) +
                                   " too close to the horizon");
  }
  if (!(tail.kappa > 0.0)) {
    throw InternalConsistencyError("integral of kappa after tau is not positive");
  }
  const double fee_term = lambda / (std::abs(dev.A1) * impact_factor(spec.impact));
  return (tail.kappa_gamma - fee_term) / tail.kappa;
}

}  // namespace detail

inline EffectiveTrajectory terminal_level(const MarketSpec& spec, const Deviations& dev,
                                          double lambda, double tau) {
  EffectiveTrajectory out{spec.gamma, tau, 0.0};
  if (deterrence_threshold(spec, dev) > lambda) {
    out.level = detail::terminal_level_from(spec, dev, lambda, tau, detail::tail_integrals(spec, tau));
  }
  return out;
}

struct Holdings {
  double theta1 = 0.0;
  double theta2 = 0.0;
};

/// Marginal value of one more share: pinned at lambda sgn(A_i) while trading.
struct AdjointValue {
  double t = 0.0;
  double Y1 = 0.0;
  double Y2 = 0.0;
};

class EquilibriumSolution {
 public:
  EquilibriumSolution(MarketSpec spec, Deviations dev, double lambda)
      : spec_(std::move(spec)), dev_(dev), lambda_(lambda) {
    if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) {
      throw ContractViolation("fee rate lambda must be finite and > 0");
    }
    if (!(spec_.impact > -0.5)) throw ContractViolation("c1 must be > -1/2");
    const double c1 = spec_.impact;
    c2_ = c1 / (1.0 + c1);
    if (c1 < 0.0) {
      warnings_.push_back("c1 < 0: buying raises the perceived drift (economically unusual)");
    }
    chi_ = deterrence_threshold(spec_, dev_);
    tau_ = last_trading_time(spec_, dev_, lambda_);
    trade_ = chi_ > lambda_;
    tail_ = detail::tail_integrals(spec_, tau_);
    if (trade_) level_ = detail::terminal_level_from(spec_, dev_, lambda_, tau_, tail_);
    breakpoints_ = detail::merged_breakpoints(spec_.kappa, spec_.gamma);
  }

  const MarketSpec& spec() const noexcept { return spec_; }
  const Deviations& deviations() const noexcept { return dev_; }
  double lambda() const noexcept { return lambda_; }
  double tau() const noexcept { return tau_; }
  double chi() const noexcept { return chi_; }
  bool trade_occurs() const noexcept { return trade_; }
  double gamma_tilde_terminal() const noexcept { return level_; }
  double c2() const noexcept { return c2_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  double c0(double t) const {
    const double c1 = spec_.impact;
    return c1 * spec_.supply -
           0.5 * impact_factor(c1) * spec_.gamma(t) * (dev_.a_sigma - spec_.supply);
  }

  double gamma_tilde(double t) const {
    detail::require_time(spec_, t);
    return t < tau_ ? spec_.gamma(t) : level_;
  }

  /// theta_i = n/2 + A_i gamma~(t) / (1 + c1); theta2 = n - theta1.
  Holdings holdings(double t) const {
    const double theta1 =
        0.5 * spec_.supply + dev_.A1 / (1.0 + spec_.impact) * gamma_tilde(t);
    return {theta1, spec_.supply - theta1};
  }

  double theta(int agent, double t) const {
    const auto h = holdings(t);
    return agent == 1 ? h.theta1 : h.theta2;
  }

  /// Total variation of either agent's path, including the time-0 block.
  double turnover() const { return std::abs(dev_.A1) / (1.0 + spec_.impact) * level_; }

  /// Fees collected from both agents: 2 lambda |theta_1,T - n/2|.
  double profit() const { return 2.0 * lambda_ * turnover(); }

  double equilibrium_drift(double t) const {
    detail::require_time(spec_, t);
    return spec_.kappa(t) * (0.5 * spec_.impact * spec_.supply -
                             0.5 * spec_.gamma(t) * (dev_.a_sigma - spec_.supply));
  }

  /// Drift agent i perceives when holding theta shares at t.
  double perceived_drift(int agent, double theta, double t) const {
    detail::require_time(spec_, t);
    return spec_.kappa(t) * (c0(t) - spec_.impact * theta +
                             spec_.gamma(t) * c2_ * (dev_.target(agent) - 0.5 * spec_.supply));
  }

  /// Y_i,t = A_i (1+2c1)/(1+c1) int_t^T kappa (gamma - gamma~) du. Before tau
  /// the integrand vanishes, so only [max(t, tau), T] contributes.
  AdjointValue adjoint(double t) const {
    detail::require_time(spec_, t);
    const double scale = impact_factor(spec_.impact);
    double tail;
    if (t <= tau_) {
      tail = tail_.kappa_gamma - level_ * tail_.kappa;
    } else {
      tail = integrate([&](double u) { return spec_.kappa(u) * (spec_.gamma(u) - level_); }, t,
                       spec_.horizon, std::span<const double>(breakpoints_));
    }
    return {t, dev_.A1 * scale * tail, dev_.A2 * scale * tail};
  }

 private:
  MarketSpec spec_;
  Deviations dev_;
  double lambda_;
  double tau_ = 0.0;
  double chi_ = 0.0;
  bool trade_ = false;
  double level_ = 0.0;
  double c2_ = 0.0;
  detail::TailIntegrals tail_;
  std::vector<double> breakpoints_;
  std::vector<std::string> warnings_;
};

inline EquilibriumSolution solve(const MarketSpec& spec, const Deviations& dev, double lambda) {
  return EquilibriumSolution(spec, dev, lambda);
}

inline Holdings holdings(const MarketSpec& spec, const Deviations& dev, double lambda, double t) {
  return solve(spec, dev, lambda).holdings(t);
}

inline double equilibrium_drift(const MarketSpec& spec, const Deviations& dev, double t) {
  detail::require_time(spec, t);
  return spec.kappa(t) *
         (0.5 * spec.impact * spec.supply - 0.5 * spec.gamma(t) * (dev.a_sigma - spec.supply));
}

inline double perceived_drift(const MarketSpec& spec, const Deviations& dev, int agent,
                              double theta, double t) {
  detail::require_time(spec, t);
  const auto c = impact_coefficients(spec, dev);
  return spec.kappa(t) * (c.c0(t) - spec.impact * theta +
                          spec.gamma(t) * c.c2 * (dev.target(agent) - 0.5 * spec.supply));
}

inline AdjointValue adjoint(const MarketSpec& spec, const Deviations& dev, double lambda,
                            double t) {
  return solve(spec, dev, lambda).adjoint(t);
}

}  // namespace impacteq
