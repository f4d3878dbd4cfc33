#pragma once

// Model inputs: the deterministic schedules for the target trajectory gamma,
// the penalty intensity kappa and the dividend volatility sigma, the market
// parameters, the trading targets and their deviations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "impacteq/errors.hpp"
#include "impacteq/numerics.hpp"

namespace impacteq {

enum class ScheduleKind { twap, constant, step, linear };

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::twap: return "twap";
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::step: return "step";
    case ScheduleKind::linear: return "linear";
  }
  return "?";
}

struct Node {
  double t = 0.0;
  double value = 0.0;

  friend bool operator==(const Node&, const Node&) = default;
};

/// A deterministic function of time from a closed family.
///
/// step tables are right-continuous (value of the last node at or before t,
/// first node's value before it); linear tables interpolate between nodes
/// and are flat outside them; twap is t / horizon.
class Schedule {
 public:
  Schedule() = default;

  static Schedule twap(double horizon) {
    Schedule s;
    s.kind_ = ScheduleKind::twap;
    s.value_ = horizon;
    return s;
  }
  static Schedule constant(double value) {
    Schedule s;
    s.kind_ = ScheduleKind::constant;
    s.value_ = value;
    return s;
  }
  static Schedule step(std::vector<Node> nodes) { return table(ScheduleKind::step, std::move(nodes)); }
  static Schedule linear(std::vector<Node> nodes) {
    return table(ScheduleKind::linear, std::move(nodes));
  }

  ScheduleKind kind() const noexcept { return kind_; }
  /// Constant level, or the horizon for twap.
  double scalar() const noexcept { return value_; }
  std::span<const Node> nodes() const noexcept { return nodes_; }

  double operator()(double t) const {
    switch (kind_) {
      case ScheduleKind::twap: return t / value_;
      case ScheduleKind::constant: return value_;
      case ScheduleKind::step: {
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t,
                                   [](double x, const Node& n) { return x < n.t; });
        if (it == nodes_.begin()) return nodes_.front().value;
        return std::prev(it)->value;
      }
      case ScheduleKind::linear: {
        if (t <= nodes_.front().t) return nodes_.front().value;
        if (t >= nodes_.back().t) return nodes_.back().value;
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t,
                                   [](double x, const Node& n) { return x < n.t; });
        const Node& r = *it;
        const Node& l = *std::prev(it);
        const double w = (t - l.t) / (r.t - l.t);
        return l.value + w * (r.value - l.value);
      }
    }
    return 0.0;
  }

  /// Node times, where the function may jump (step) or kink (linear).
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    out.reserve(nodes_.size());
    for (const auto& n : nodes_) out.push_back(n.t);
    return out;
  }

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  static Schedule table(ScheduleKind kind, std::vector<Node> nodes) {
    Schedule s;
    s.kind_ = kind;
    s.nodes_ = std::move(nodes);
    return s;
  }

  ScheduleKind kind_ = ScheduleKind::constant;
  double value_ = 0.0;
  std::vector<Node> nodes_;
};

struct MarketSpec {
  double horizon = 1.0;        // T
  double supply = 100.0;       // n
  double impact = 0.0;         // c1
  double dividend_mean = 0.0;  // E[D]
  Schedule kappa = Schedule::constant(1.0);
  Schedule gamma = Schedule::twap(1.0);
  Schedule sigma = Schedule::constant(0.0);

  friend bool operator==(const MarketSpec&, const MarketSpec&) = default;
};

struct TargetPair {
  double a1 = 0.0;
  double a2 = 0.0;

  friend bool operator==(const TargetPair&, const TargetPair&) = default;
};

/// Aggregate target and each agent's deviation from half of it.
/// a2 - a_sigma/2 is stored as -A1 so that A1 + A2 == 0 holds exactly.
struct Deviations {
  double a_sigma = 0.0;
  double A1 = 0.0;
  double A2 = 0.0;

  double of(int agent) const { return agent == 1 ? A1 : A2; }
  /// The agent's own target a_i.
  double target(int agent) const { return 0.5 * a_sigma + of(agent); }
};

inline Deviations deviations(const TargetPair& targets) {
  Deviations d;
  d.a_sigma = targets.a1 + targets.a2;
  d.A1 = 0.5 * (targets.a1 - targets.a2);
  d.A2 = -d.A1;
  return d;
}

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

namespace detail {

inline void require_time(const MarketSpec& spec, double t) {
  if (!(t >= 0.0 && t <= spec.horizon)) {
    throw DomainError("time " + std::to_string(t) + " outside [0, " +
                      std::to_string(spec.horizon) + "]");
  }
}

inline std::vector<double> merged_breakpoints(const Schedule& a, const Schedule& b) {
  auto out = a.breakpoints();
  const auto more = b.breakpoints();
  out.insert(out.end(), more.begin(), more.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

inline double eval_gamma(const MarketSpec& spec, double t) {
  detail::require_time(spec, t);
  return spec.gamma(t);
}

inline double eval_kappa(const MarketSpec& spec, double t) {
  detail::require_time(spec, t);
  return spec.kappa(t);
}

/// Every violated input constraint; empty when the spec is valid.
inline std::vector<std::string> check(const MarketSpec& spec) {
  std::vector<std::string> bad;
  const auto finite = [&](double v, const char* name) {
    if (!std::isfinite(v)) bad.push_back(std::string(name) + " must be finite");
    return std::isfinite(v);
  };

  if (finite(spec.horizon, "T") && !(spec.horizon > 0.0)) bad.push_back("T must be > 0");
  if (finite(spec.supply, "n") && !(spec.supply > 0.0)) bad.push_back("n must be > 0");
  if (finite(spec.impact, "c1") && !(spec.impact > -0.5)) {
    bad.push_back("parameter error: c1 must be > -1/2");
  }
  finite(spec.dividend_mean, "dividend_mean");
  if (!bad.empty()) return bad;

  const double T = spec.horizon;
  const auto check_table = [&](const Schedule& s, const char* name) {
    if (s.kind() != ScheduleKind::step && s.kind() != ScheduleKind::linear) return true;
    const auto nodes = s.nodes();
    if (nodes.empty()) {
      bad.push_back(std::string(name) + " table is empty");
      return false;
    }
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (!std::isfinite(nodes[k].t) || !std::isfinite(nodes[k].value)) {
        bad.push_back(std::string(name) + " table has a non-finite entry");
        return false;
      }
      if (k > 0 && !(nodes[k].t > nodes[k - 1].t)) {
        bad.push_back(std::string(name) + " table times must be strictly increasing");
        return false;
      }
    }
    return true;
  };

  // Dense samples plus every node and its left neighbourhood.
  const auto samples = [&](const Schedule& s) {
    constexpr int kDense = 2048;
    std::vector<double> ts;
    for (int k = 0; k <= kDense; ++k) ts.push_back(T * k / kDense);
    for (const auto& n : s.nodes()) {
      if (n.t >= 0.0 && n.t <= T) {
        ts.push_back(n.t);
        if (n.t > 0.0) ts.push_back(std::max(0.0, std::nextafter(n.t, 0.0)));
      }
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
  };

  if (spec.gamma.kind() == ScheduleKind::twap) {
    if (!(spec.gamma.scalar() > 0.0) || !std::isfinite(spec.gamma.scalar())) {
      bad.push_back("gamma twap horizon must be > 0");
    }
  } else if (check_table(spec.gamma, "gamma")) {
    double prev = -1.0;
    for (double t : samples(spec.gamma)) {
      const double g = spec.gamma(t);
      if (!(g >= 0.0 && g <= 1.0)) {
        bad.push_back("gamma outside [0,1] at t = " + std::to_string(t));
        break;
      }
      if (g < prev) {
        bad.push_back("monotonicity error: gamma decreases at t = " + std::to_string(t));
        break;
      }
      prev = g;
    }
  }
  if (spec.gamma.kind() == ScheduleKind::twap && spec.gamma.scalar() < spec.horizon) {
    bad.push_back("gamma twap horizon must be >= T so that gamma stays in [0,1]");
  }

  if (spec.kappa.kind() == ScheduleKind::twap) {
    bad.push_back("kappa does not support the twap kind");
  } else if (check_table(spec.kappa, "kappa")) {
    for (double t : samples(spec.kappa)) {
      if (t <= 0.0 || t >= T) continue;
      const double k = spec.kappa(t);
      if (!(k > 0.0) || !std::isfinite(k)) {
        bad.push_back("positivity error: kappa <= 0 at t = " + std::to_string(t));
        break;
      }
    }
    try {
      const auto bp = spec.kappa.breakpoints();
      const double total = integrate(spec.kappa, 0.0, T, std::span<const double>(bp));
      if (!std::isfinite(total)) bad.push_back("integral of kappa is not finite");
    } catch (const IntegrationError& e) {
      bad.push_back(std::string("integral of kappa failed: ") + e.what());
    }
  }

  if (spec.sigma.kind() == ScheduleKind::twap) {
    bad.push_back("sigma does not support the twap kind");
  } else if (check_table(spec.sigma, "sigma")) {
    for (double t : samples(spec.sigma)) {
      const double s = spec.sigma(t);
      if (!(s >= 0.0) || !std::isfinite(s)) {
        bad.push_back("sigma must be finite and >= 0");
        break;
      }
    }
  }
  return bad;
}

/// Returns the spec unchanged or throws ValidationError listing every
/// violation.
inline const MarketSpec& validate(const MarketSpec& spec) {
  auto bad = check(spec);
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return spec;
}

/// The configuration used for the exchange example: T = 1, n = 100,
/// kappa = 1, TWAP targeting.
inline MarketSpec twap_example_spec(double c1 = 0.0, double dividend_mean = 100.0) {
  MarketSpec spec;
  spec.horizon = 1.0;
  spec.supply = 100.0;
  spec.impact = c1;
  spec.dividend_mean = dividend_mean;
  spec.kappa = Schedule::constant(1.0);
  spec.gamma = Schedule::twap(1.0);
  spec.sigma = Schedule::constant(0.0);
  return spec;
}

}  // namespace impacteq
