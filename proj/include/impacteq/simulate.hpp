#pragma once

// Seeded path simulation of the equilibrium price, holdings, realized wealth
// and money-market positions on a uniform grid.
//
// Gaussian increments: std::mt19937_64 seeded with `seed`, each 64-bit word
// mapped to the open unit interval as ((w >> 11) + 0.5) * 2^-53, pairs of
// uniforms turned into normals by Box-Muller (cos branch first).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "impacteq/equilibrium.hpp"
#include "impacteq/model.hpp"
#include "impacteq/numerics.hpp"

namespace impacteq {

inline constexpr std::size_t kDefaultSimulationSteps = 1024;

/// Standard normal stream with a fixed, documented transform.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct PathBundle {
  double lambda = 0.0;
  double supply = 0.0;
  std::vector<double> t;
  std::vector<double> dB;  // dB[k] drives [t[k], t[k+1])
  std::vector<double> S_hat;
  std::vector<double> theta1, theta2;
  std::vector<double> X1, X2;
  std::vector<double> mm1, mm2;
  std::vector<double> turnover1, turnover2;  // cumulative, time-0 block included
  double D = 0.0;

  std::size_t size() const noexcept { return t.size(); }
};

namespace detail {

// Cumulative |d theta| starting from the endowment `initial`.
inline std::vector<double> running_variation(std::span<const double> theta, double initial) {
  std::vector<double> out(theta.size());
  double prev = initial;
  double total = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    total += std::abs(theta[k] - prev);
    prev = theta[k];
    out[k] = total;
  }
  return out;
}

}  // namespace detail

/// 1/2 int_t^T kappa (gamma (a_sigma - n) - c1 n) du, the deterministic part
/// of the equilibrium price beyond E[D].
inline double price_drift_tail(const MarketSpec& spec, const Deviations& dev, double t) {
  const double gap = dev.a_sigma - spec.supply;
  const double base = spec.impact * spec.supply;
  const auto bp = detail::merged_breakpoints(spec.kappa, spec.gamma);
  return 0.5 * integrate([&](double u) { return spec.kappa(u) * (spec.gamma(u) * gap - base); }, t,
                         spec.horizon, std::span<const double>(bp));
}

inline PathBundle simulate(const MarketSpec& spec, const Deviations& dev, double lambda,
                           std::size_t n_steps = kDefaultSimulationSteps, std::uint64_t seed = 1) {
  if (n_steps < 2) throw ContractViolation("simulate: needs at least 2 steps");
  const auto sol = solve(spec, dev, lambda);
  const double T = spec.horizon;
  const double n = spec.supply;
  const std::size_t N = n_steps;

  PathBundle b;
  b.lambda = lambda;
  b.supply = n;
  b.t.resize(N + 1);
  b.dB.resize(N);
  for (std::size_t k = 0; k <= N; ++k) b.t[k] = k == N ? T : T * static_cast<double>(k) / N;

  GaussianStream normal(seed);
  b.S_hat.resize(N + 1);
  double martingale = 0.0;
  for (std::size_t k = 0; k <= N; ++k) {
    b.S_hat[k] = spec.dividend_mean + martingale + price_drift_tail(spec, dev, b.t[k]);
    if (k < N) {
      const double dt = b.t[k + 1] - b.t[k];
      b.dB[k] = std::sqrt(dt) * normal();
      martingale += spec.sigma(b.t[k]) * b.dB[k];
    }
  }
  b.D = b.S_hat[N];

  b.theta1.resize(N + 1);
  b.theta2.resize(N + 1);
  b.X1.resize(N + 1);
  b.X2.resize(N + 1);
  b.mm1.resize(N + 1);
  b.mm2.resize(N + 1);

  for (std::size_t k = 0; k <= N; ++k) {
    const auto h = sol.holdings(b.t[k]);
    b.theta1[k] = h.theta1;
    b.theta2[k] = h.theta2;
  }
  b.turnover1 = detail::running_variation(b.theta1, 0.5 * n);
  b.turnover2 = detail::running_variation(b.theta2, 0.5 * n);

  const double start = 0.5 * n * b.S_hat[0];
  double gains1 = 0.0, gains2 = 0.0;
  for (std::size_t k = 0; k <= N; ++k) {
    if (k > 0) {
      const double dS = b.S_hat[k] - b.S_hat[k - 1];
      gains1 += b.theta1[k - 1] * dS;
      gains2 += b.theta2[k - 1] * dS;
    }
    b.X1[k] = start + gains1 - lambda * b.turnover1[k];
    b.X2[k] = start + gains2 - lambda * b.turnover2[k];
    b.mm1[k] = b.X1[k] - b.theta1[k] * b.S_hat[k];
    b.mm2[k] = b.X2[k] - b.theta2[k] * b.S_hat[k];
  }
  return b;
}

struct TurnoverPaths {
  std::vector<double> agent1;
  std::vector<double> agent2;
};

/// Running total variation of each holdings path, initial block included.
inline TurnoverPaths turnover_path(const PathBundle& bundle) {
  return {detail::running_variation(bundle.theta1, 0.5 * bundle.supply),
          detail::running_variation(bundle.theta2, 0.5 * bundle.supply)};
}

}  // namespace impacteq
