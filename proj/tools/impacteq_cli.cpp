// impacteq-cli: solve, verify and explore the fee/impact equilibrium from a
// JSON config. Exit codes: 0 ok, 2 input or validation error, 3 a
// verification check failed, 1 internal numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "impacteq/impacteq.hpp"

namespace fs = std::filesystem;
using impacteq::io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitVerification = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> lambda;
  std::optional<std::size_t> grid;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> paths;
  std::optional<unsigned> threads;
  std::optional<std::string> method;
  std::vector<double> c1_values;
  bool dump_config = false;
  bool inject_fault = false;
};

impacteq::RunConfig load(const Overrides& o) {
  auto c = impacteq::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out_dir = *o.out;
  if (o.lambda) c.fee.lambda = *o.lambda;
  if (o.grid) c.options.grid = *o.grid;
  if (o.samples) c.options.samples = *o.samples;
  if (o.trials) c.options.trials = *o.trials;
  if (o.steps) c.options.steps = *o.steps;
  if (o.paths) c.options.paths = *o.paths;
  if (o.threads) c.options.threads = *o.threads;
  if (o.method) c.options.method = impacteq::parse_method(*o.method);
  if (!o.c1_values.empty()) c.options.c1_values = o.c1_values;
  impacteq::validate_config(c);
  return c;
}

impacteq::TargetPair require_targets(const impacteq::RunConfig& c) {
  if (!c.targets) throw impacteq::ValidationError({"this command needs point targets {a1, a2}"});
  return *c.targets;
}

double require_lambda(const impacteq::RunConfig& c) {
  if (!c.fee.lambda) throw impacteq::ValidationError({"this command needs fee.lambda or --lambda"});
  return *c.fee.lambda;
}

void emit(const impacteq::RunConfig& c, const std::string& name, const json& j) {
  const auto text = impacteq::io::dump(j);
  impacteq::io::write_text(fs::path(c.out_dir) / name, text);
  std::cout << text;
}

json solution_summary(const impacteq::EquilibriumSolution& sol) {
  const auto& spec = sol.spec();
  const auto& dev = sol.deviations();
  const double T = spec.horizon;
  return {{"lambda", sol.lambda()},
          {"A1", dev.A1},
          {"A2", dev.A2},
          {"chi", sol.chi()},
          {"trade_occurs", sol.trade_occurs()},
          {"tau", sol.tau()},
          {"gamma_tilde_terminal", sol.gamma_tilde_terminal()},
          {"c0_start", sol.c0(0.0)},
          {"c0_end", sol.c0(T)},
          {"c2", sol.c2()},
          {"theta1_terminal", sol.holdings(T).theta1},
          {"theta2_terminal", sol.holdings(T).theta2},
          {"turnover", sol.turnover()},
          {"profit", sol.profit()},
          {"lambda_max", impacteq::deterrence_fee_bound(spec, dev)},
          {"warnings", sol.warnings()}};
}

int cmd_solve(const impacteq::RunConfig& c) {
  const auto sol = impacteq::solve(c.market, impacteq::deviations(require_targets(c)),
                                   require_lambda(c));
  impacteq::io::Csv csv({"t", "theta1", "theta2", "gamma_tilde", "c0", "Y1", "Y2"});
  for (double t : impacteq::uniform_grid(c.market.horizon, c.options.steps)) {
    const auto h = sol.holdings(t);
    const auto y = sol.adjoint(t);
    csv.add_row({t, h.theta1, h.theta2, sol.gamma_tilde(t), sol.c0(t), y.Y1, y.Y2});
  }
  csv.write(fs::path(c.out_dir) / "holdings.csv");
  for (const auto& w : sol.warnings()) std::cerr << "warning: " << w << '\n';
  emit(c, "solve.json", solution_summary(sol));
  return kExitOk;
}

json check_json(bool passed, double value, double limit) {
  return {{"passed", passed}, {"value", value}, {"limit", limit}};
}

int cmd_verify(const impacteq::RunConfig& c, bool inject_fault) {
  using namespace impacteq;
  const auto dev = deviations(require_targets(c));
  const double lambda = require_lambda(c);
  const auto sol = solve(c.market, dev, lambda);
  const double n = c.market.supply;
  const double scale = std::max(1.0, std::abs(n));
  const std::size_t N = c.options.grid;
  bool all = true;
  json checks = json::object();

  // Optimality of each agent's discretized holdings.
  json optimality = json::array();
  for (int agent : {1, 2}) {
    auto candidate = discretize_equilibrium(sol, N, agent);
    if (inject_fault && agent == 1) {
      for (std::size_t k = N / 4; k < N / 2; ++k) candidate.values[k] += 0.5 * std::max(1.0, std::abs(dev.A1));
    }
    const Objective value(c.market, dev, agent, candidate.grid, lambda);
    OptimalityReport r;
    try {
      r = verify_candidate(value, candidate, dev.A1, c.options.trials, c.seed, 0.0);
    } catch (const OptimalityViolation& e) {
      r = e.report();
    }
    all = all && r.passed();
    optimality.push_back({{"agent", agent},
                          {"passed", r.passed()},
                          {"v_star", r.v_star},
                          {"worst_gap", r.worst_gap},
                          {"ascent_gain", r.ascent_gain},
                          {"tolerance", r.tolerance},
                          {"challengers", r.n_challengers},
                          {"ascent_sweeps", r.ascent_sweeps}});
  }
  checks["optimality"] = std::move(optimality);

  // Stock clearing on the same grid as the (possibly corrupted) candidate.
  double clearing = 0.0;
  const auto theta1 = discretize_equilibrium(sol, c.options.steps, 1);
  const auto theta2 = discretize_equilibrium(sol, c.options.steps, 2);
  for (std::size_t k = 0; k < theta1.values.size(); ++k) {
    double x1 = theta1.values[k];
    const double t = theta1.grid[k];
    if (inject_fault && t >= 0.25 * c.market.horizon && t < 0.5 * c.market.horizon) {
      x1 += 0.5 * std::max(1.0, std::abs(dev.A1));
    }
    clearing = std::max(clearing, std::abs(x1 + theta2.values[k] - n));
  }
  const bool clearing_ok = clearing <= 1e-12 * scale;
  checks["clearing"] = check_json(clearing_ok, clearing, 1e-12 * scale);

  const double consistency = verify_consistency(sol, c.options.steps);
  const double consistency_limit = 1e-10 * scale * (1.0 + std::abs(c.market.impact));
  const bool consistency_ok = consistency <= consistency_limit;
  checks["drift_consistency"] = check_json(consistency_ok, consistency, consistency_limit);

  const auto adj = verify_adjoint(sol, c.options.steps);
  const bool bound_ok = adj.max_abs <= lambda * (1.0 + 1e-12);
  const double pin_limit = 1e-10 * std::max(1.0, lambda);
  const bool pin_ok = adj.max_pin_error <= pin_limit;
  checks["adjoint_bound"] = check_json(bound_ok, adj.max_abs, lambda * (1.0 + 1e-12));
  checks["adjoint_pin"] = check_json(pin_ok, adj.max_pin_error, pin_limit);

  double money = 0.0, consumption = 0.0;
  bool terminal_ok = true;
  for (std::size_t p = 0; p < c.options.paths; ++p) {
    const auto bundle = simulate(c.market, dev, lambda, c.options.steps, c.seed + p);
    const auto w = verify_walras(bundle);
    money = std::max(money, w.money / w.scale);
    consumption = std::max(consumption, w.consumption / w.scale);
    terminal_ok = terminal_ok && bundle.S_hat.back() == bundle.D;
  }
  const bool walras_ok = money <= 1e-10 && consumption <= 1e-10 && terminal_ok;
  checks["walras"] = {{"passed", walras_ok},
                      {"money", money},
                      {"consumption", consumption},
                      {"terminal_price_is_dividend", terminal_ok},
                      {"limit", 1e-10},
                      {"paths", c.options.paths}};

  all = all && clearing_ok && consistency_ok && bound_ok && pin_ok && walras_ok;
  json report = {{"passed", all},
                 {"fault_injected", inject_fault},
                 {"seed", c.seed},
                 {"grid", N},
                 {"solution", solution_summary(sol)},
                 {"checks", std::move(checks)}};
  emit(c, "verify.json", report);
  return all ? kExitOk : kExitVerification;
}

std::vector<double> curve_grid(const impacteq::RunConfig& c, const impacteq::TargetPrior& prior) {
  const auto moments = impacteq::deviation_moments(prior, c.seed);
  const auto bp = c.market.kappa.breakpoints();
  const double kappa_total =
      impacteq::integrate(c.market.kappa, 0.0, c.market.horizon, std::span<const double>(bp));
  const std::size_t points = c.options.curve_points;
  const double hi = c.options.curve_hi.value_or(2.0 * moments.mean_abs * kappa_total);
  const double lo = c.options.curve_lo.value_or(hi / static_cast<double>(points));
  if (!(hi > lo) || !(lo > 0.0)) {
    throw impacteq::ValidationError({"profit-curve: empty lambda range (is E|A1| zero?)"});
  }
  std::vector<double> grid(points);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = k + 1 == points ? hi : lo + (hi - lo) * static_cast<double>(k) / (points - 1);
  }
  return grid;
}

impacteq::CurveOptions curve_options(const impacteq::RunConfig& c) {
  return {c.options.method, c.options.samples, c.seed, c.options.threads};
}

int cmd_profit_curve(const impacteq::RunConfig& c) {
  const auto prior = c.effective_prior();
  const auto lambdas = curve_grid(c, prior);
  std::vector<double> c1s = c.options.c1_values;
  if (c1s.empty()) c1s.push_back(c.market.impact);

  impacteq::io::Csv csv({"c1", "lambda", "expected_profit", "stderr"});
  json curves = json::array();
  for (double c1 : c1s) {
    auto spec = c.market;
    spec.impact = c1;
    const auto curve = impacteq::profit_curve(spec, prior, lambdas, curve_options(c));
    std::size_t best = 0;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      csv.add_row({c1, curve.lambdas[k], curve.values[k], curve.stderrs[k]});
      if (curve.values[k] > curve.values[best]) best = k;
    }
    curves.push_back({{"c1", c1},
                      {"grid_argmax", curve.lambdas[best]},
                      {"grid_max", curve.values[best]}});
  }
  csv.write(fs::path(c.out_dir) / "profit_curve.csv");
  emit(c, "profit_curve.json",
       {{"method", impacteq::to_string(c.options.method)},
        {"points", lambdas.size()},
        {"lambda_lo", lambdas.front()},
        {"lambda_hi", lambdas.back()},
        {"csv", (fs::path(c.out_dir) / "profit_curve.csv").string()},
        {"curves", std::move(curves)}});
  return kExitOk;
}

int cmd_optimize_fee(const impacteq::RunConfig& c) {
  impacteq::FeeSearch search;
  search.curve = curve_options(c);
  search.lo = c.fee.search_lo;
  search.hi = c.fee.search_hi;
  const auto opt = impacteq::optimal_fee(c.market, c.effective_prior(), search);
  for (const auto& w : opt.warnings) std::cerr << "warning: " << w << '\n';
  emit(c, "optimal_fee.json",
       {{"lambda_hat", opt.lambda_hat},
        {"value", opt.value},
        {"method", opt.method},
        {"evaluations", opt.evaluations},
        {"search_lo", opt.search_lo},
        {"search_hi", opt.search_hi},
        {"flat", opt.flat},
        {"warnings", opt.warnings}});
  return kExitOk;
}

int cmd_simulate(const impacteq::RunConfig& c) {
  const auto dev = impacteq::deviations(require_targets(c));
  const auto b = impacteq::simulate(c.market, dev, require_lambda(c), c.options.steps, c.seed);
  impacteq::io::Csv csv({"t", "S_hat", "theta1", "theta2", "X1", "X2", "mm1", "mm2"});
  for (std::size_t k = 0; k < b.size(); ++k) {
    csv.add_row({b.t[k], b.S_hat[k], b.theta1[k], b.theta2[k], b.X1[k], b.X2[k], b.mm1[k], b.mm2[k]});
  }
  csv.write(fs::path(c.out_dir) / "paths.csv");
  const auto w = impacteq::verify_walras(b);
  emit(c, "simulate.json",
       {{"seed", c.seed},
        {"steps", c.options.steps},
        {"S0", b.S_hat.front()},
        {"D", b.D},
        {"turnover1", b.turnover1.back()},
        {"turnover2", b.turnover2.back()},
        {"walras_money", w.money / w.scale},
        {"walras_consumption", w.consumption / w.scale},
        {"csv", (fs::path(c.out_dir) / "paths.csv").string()}});
  return kExitOk;
}

void add_common(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "RNG seed (default 1)");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--lambda", o.lambda, "fee level");
  app.add_option("--grid", o.grid, "optimality grid intervals");
  app.add_option("--samples", o.samples, "Monte Carlo samples");
  app.add_option("--trials", o.trials, "random challengers in verify");
  app.add_option("--steps", o.steps, "time steps for paths and CSV output");
  app.add_option("--paths", o.paths, "simulated paths in verify");
  app.add_option("--threads", o.threads, "worker threads (0 = all cores)");
  app.add_option("--method", o.method, "expected-profit method")->check(CLI::IsMember({"mc", "quadrature"}));
  app.add_flag("--dump-config", o.dump_config, "print the effective config and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fee and price-impact equilibrium: solve, verify, profit curves, optimal fee"};
  app.require_subcommand(1);

  Overrides o;
  auto* solve = app.add_subcommand("solve", "equilibrium summary and holdings CSV");
  auto* verify = app.add_subcommand("verify", "optimality, clearing, consistency, adjoint and Walras checks");
  auto* curve = app.add_subcommand("profit-curve", "expected exchange profit on a fee grid");
  auto* optimize = app.add_subcommand("optimize-fee", "revenue-maximizing fee");
  auto* sim = app.add_subcommand("simulate", "one simulated price and wealth path");
  for (auto* sub : {solve, verify, curve, optimize, sim}) add_common(*sub, o);
  verify->add_flag("--inject-fault", o.inject_fault, "corrupt agent 1's holdings (tests the checks)");
  curve->add_option("--c1", o.c1_values, "one curve per impact value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    const auto config = load(o);
    if (o.dump_config) {
      std::cout << impacteq::dump_config(config);
      return kExitOk;
    }
    if (solve->parsed()) return cmd_solve(config);
    if (verify->parsed()) return cmd_verify(config, o.inject_fault);
    if (curve->parsed()) return cmd_profit_curve(config);
    if (optimize->parsed()) return cmd_optimize_fee(config);
    if (sim->parsed()) return cmd_simulate(config);
  } catch (const impacteq::ValidationError& e) {
    std::cerr << "invalid input:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
    return kExitInput;
  } catch (const impacteq::ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInput;
  } catch (const impacteq::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInput;
}
