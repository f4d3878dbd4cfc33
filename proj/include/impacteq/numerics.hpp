#pragma once

// Scalar numerics shared by the equilibrium, oracle and exchange layers:
// breakpoint-aware adaptive Simpson quadrature, indicator bisection for
// first-passage times of nonincreasing functions, and a grid + golden
// section maximizer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "impacteq/errors.hpp"

namespace impacteq {

/// A real function of time together with the points where it may jump or
/// kink. Quadrature never places such a point inside a panel.
struct Real1DFunction {
  std::function<double(double)> evaluator;
  std::vector<double> breakpoints;

  double operator()(double t) const { return evaluator(t); }
};

inline constexpr double kDefaultIntegrationTolerance = 1e-10;

namespace detail {

template <class F>
double checked_eval(const F& f, double t) {
  const double v = f(t);
  if (!std::isfinite(v)) throw IntegrationError(t);
  return v;
}

template <class F>
double simpson_refine(const F& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = checked_eval(f, lm);
  const double frm = checked_eval(f, rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Panel edges: a, every breakpoint strictly inside (a, b), b.
inline std::vector<double> panel_edges(double a, double b, std::span<const double> breakpoints) {
  std::vector<double> edges;
  edges.reserve(breakpoints.size() + 2);
  edges.push_back(a);
  for (double p : breakpoints) {
    if (p > a && p < b) edges.push_back(p);
  }
  edges.push_back(b);
  std::sort(edges.begin() + 1, edges.end() - 1);
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace detail

/// Adaptive composite Simpson rule on [a, b].
///
/// Each panel between consecutive breakpoints is integrated separately. The
/// right end of a panel is sampled at its left limit, so right-continuous
/// step functions are integrated exactly. The result satisfies
/// |I - integral| <= rel_tol * (1 + |I|) for piecewise-smooth integrands.
template <class F>
double integrate(const F& f, double a, double b, std::span<const double> breakpoints,
                 double rel_tol = kDefaultIntegrationTolerance) {
  if (!(a <= b)) throw ContractViolation("integrate: requires a <= b");
  if (a == b) return 0.0;

  constexpr int kMaxDepth = 48;
  const auto edges = detail::panel_edges(a, b, breakpoints);

  struct Panel {
    double lo, hi, flo, fmid, fhi, whole;
  };
  std::vector<Panel> panels;
  panels.reserve(edges.size() - 1);
  double coarse = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double lo = edges[k];
    const double hi = edges[k + 1];
    const double mid = 0.5 * (lo + hi);
    const double flo = detail::checked_eval(f, lo);
    const double fmid = detail::checked_eval(f, mid);
    const double fhi = detail::checked_eval(f, std::nextafter(hi, lo));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    panels.push_back({lo, hi, flo, fmid, fhi, whole});
    coarse += whole;
  }

  const double abs_tol = rel_tol * (1.0 + std::abs(coarse));
  double total = 0.0;
  for (const auto& p : panels) {
    const double share = abs_tol * (p.hi - p.lo) / (b - a);
    total += detail::simpson_refine(f, p.lo, p.hi, p.flo, p.fmid, p.fhi, p.whole, share,
                                    kMaxDepth);
  }
  return total;
}

template <class F>
double integrate(const F& f, double a, double b, double rel_tol = kDefaultIntegrationTolerance) {
  return integrate(f, a, b, std::span<const double>{}, rel_tol);
}

inline double integrate(const Real1DFunction& f, double a, double b,
                        double rel_tol = kDefaultIntegrationTolerance) {
  return integrate(f.evaluator, a, b, std::span<const double>(f.breakpoints), rel_tol);
}

/// inf{ t in [lo, hi] : g(t) <= level } for a nonincreasing g, by bisection
/// on the indicator {g <= level}. Jumps in g are allowed.
///
/// Returns lo when g(lo) <= level and hi when g(hi) > level. A sample that
/// contradicts monotonicity beyond a small relative slack throws
/// ContractViolation. tol <= 0 selects 1e-12 * (hi - lo).
template <class G>
double first_time_below(const G& g, double level, double lo, double hi, double tol = 0.0) {
  if (!(lo <= hi)) throw ContractViolation("first_time_below: requires lo <= hi");
  if (tol <= 0.0) tol = 1e-12 * (hi - lo);
  if (tol <= 0.0) return lo;

  double g_lo = g(lo);
  if (g_lo <= level) return lo;
  double g_hi = g(hi);
  if (g_hi > level) return hi;

  const auto slack = [](double x, double y) {
    return 1e-9 * (1.0 + std::abs(x) + std::abs(y));
  };
  if (g_hi > g_lo + slack(g_lo, g_hi)) {
    throw ContractViolation("first_time_below: function increases between the endpoints");
  }

  while (hi - lo > tol) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double g_mid = g(mid);
    if (g_mid > g_lo + slack(g_lo, g_mid) || g_mid < g_hi - slack(g_hi, g_mid)) {
      throw ContractViolation("first_time_below: non-monotone sample at t = " +
                              std::to_string(mid));
    }
    if (g_mid <= level) {
      hi = mid;
      g_hi = g_mid;
    } else {
      lo = mid;
      g_lo = g_mid;
    }
  }
  return hi;
}

struct Maximum {
  double argmax = 0.0;
  double value = -std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

/// Golden-section search for a maximum of f inside [lo, hi].
template <class F>
Maximum golden_section_max(const F& f, double lo, double hi, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  Maximum best;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  best.evaluations = 2;
  while (hi - lo > tol) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    }
    ++best.evaluations;
    if (x2 - x1 <= 0.0) break;
  }
  if (f1 >= f2) {
    best.argmax = x1;
    best.value = f1;
  } else {
    best.argmax = x2;
    best.value = f2;
  }
  return best;
}

/// Coarse uniform scan of [lo, hi] with `coarse_points` nodes, then golden
/// section refinement inside the brackets around the `starts` best nodes.
/// The result is never worse than the best grid node.
template <class F>
Maximum maximize_1d(const F& f, double lo, double hi, std::size_t coarse_points,
                    double refine_tol, std::size_t starts = 1) {
  if (!(lo < hi)) throw ContractViolation("maximize_1d: requires lo < hi");
  if (coarse_points < 3) throw ContractViolation("maximize_1d: needs at least 3 grid points");

  const double step = (hi - lo) / static_cast<double>(coarse_points - 1);
  std::vector<double> xs(coarse_points);
  std::vector<double> ys(coarse_points);
  for (std::size_t k = 0; k < coarse_points; ++k) {
    xs[k] = k + 1 == coarse_points ? hi : lo + step * static_cast<double>(k);
    ys[k] = f(xs[k]);
  }

  std::vector<std::size_t> order(coarse_points);
  for (std::size_t k = 0; k < coarse_points; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return ys[l] > ys[r]; });

  Maximum best{xs[order.front()], ys[order.front()], coarse_points};
  const std::size_t n_starts = std::min(std::max<std::size_t>(starts, 1), coarse_points);
  for (std::size_t s = 0; s < n_starts; ++s) {
    const std::size_t k = order[s];
    const double a = xs[k == 0 ? 0 : k - 1];
    const double b = xs[std::min(k + 1, coarse_points - 1)];
    const Maximum local = golden_section_max(f, a, b, refine_tol);
    best.evaluations += local.evaluations;
    if (local.value > best.value) {
      best.argmax = local.argmax;
      best.value = local.value;
    }
  }
  return best;
}

}  // namespace impacteq
