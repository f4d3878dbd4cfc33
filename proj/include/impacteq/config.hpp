#pragma once

// Run configuration: a JSON document with sections market, kappa, gamma,
// targets, fee, rng, output and options. Parsing collects every problem it
// finds and throws ValidationError; to_json emits the canonical form, which
// parses back to an equal RunConfig.
//
//   schedule := number                                  (constant)
//             | {"kind": "constant", "value": x}
//             | {"kind": "twap", "horizon": H}          (horizon defaults to T)
//             | {"kind": "step" | "linear", "nodes": [[t, v], ...]}
//   marginal := number                                  (point)
//             | {"kind": "point", "value": x}
//             | {"kind": "uniform", "lo": x, "hi": y}
//             | {"kind": "normal", "mean": m, "sd": s}

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "impacteq/errors.hpp"
#include "impacteq/exchange.hpp"
#include "impacteq/io.hpp"
#include "impacteq/model.hpp"

namespace impacteq {

inline constexpr std::uint64_t kDefaultSeed = 1;

struct FeeSetting {
  std::optional<double> lambda;
  std::optional<double> search_lo;
  std::optional<double> search_hi;

  friend bool operator==(const FeeSetting&, const FeeSetting&) = default;
};

struct RunOptions {
  std::size_t grid = 64;          // optimality grid intervals
  std::size_t trials = 1000;      // random challengers
  std::size_t samples = 10000;    // Monte Carlo target draws
  std::size_t steps = kDefaultSimulationSteps;
  std::size_t paths = 1;          // simulated paths (verify / simulate)
  unsigned threads = 1;
  ProfitMethod method = ProfitMethod::monte_carlo;
  std::size_t curve_points = 200;
  std::optional<double> curve_lo;
  std::optional<double> curve_hi;
  std::vector<double> c1_values;  // profit-curve: one curve per value

  friend bool operator==(const RunOptions&, const RunOptions&) = default;
};

struct RunConfig {
  MarketSpec market;
  std::optional<TargetPair> targets;
  std::optional<TargetPrior> prior;
  FeeSetting fee;
  std::uint64_t seed = kDefaultSeed;
  std::string out_dir = ".";
  RunOptions options;

  /// Point targets as a degenerate prior, or the prior itself.
  TargetPrior effective_prior() const {
    if (prior) return *prior;
    if (targets) return TargetPrior::point(*targets);
    throw ContractViolation("config has neither targets nor a prior");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

using io::json;

class Reader {
 public:
  std::vector<std::string> errors;

  void allow(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) {
      errors.push_back(where + ": expected an object");
      return;
    }
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : obj.items()) {
      if (!known.count(key)) errors.push_back(where + ": unknown key '" + key + "'");
    }
  }

  std::optional<double> number(const json& obj, const std::string& where, const char* key,
                               bool required) {
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) errors.push_back(where + "." + key + ": missing");
      return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      errors.push_back(where + "." + key + ": expected a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  template <class Int>
  std::optional<Int> integer(const json& obj, const std::string& where, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      errors.push_back(where + "." + key + ": expected a non-negative integer");
      return std::nullopt;
    }
    return static_cast<Int>(v.get<std::uint64_t>());
  }

  std::optional<Schedule> schedule(const json& v, const std::string& where, double horizon) {
    if (v.is_number()) return Schedule::constant(v.get<double>());
    if (!v.is_object() || !v.contains("kind") || !v.at("kind").is_string()) {
      errors.push_back(where + ": expected a number or an object with a string 'kind'");
      return std::nullopt;
    }
    const auto kind = v.at("kind").get<std::string>();
    if (kind == "constant") {
      allow(v, where, {"kind", "value"});
      if (auto x = number(v, where, "value", true)) return Schedule::constant(*x);
      return std::nullopt;
    }
    if (kind == "twap") {
      allow(v, where, {"kind", "horizon"});
      return Schedule::twap(number(v, where, "horizon", false).value_or(horizon));
    }
    if (kind == "step" || kind == "linear") {
      allow(v, where, {"kind", "nodes"});
      if (!v.contains("nodes") || !v.at("nodes").is_array() || v.at("nodes").empty()) {
        errors.push_back(where + ".nodes: expected a non-empty array of [t, value] pairs");
        return std::nullopt;
      }
      std::vector<Node> nodes;
      for (const auto& p : v.at("nodes")) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
          errors.push_back(where + ".nodes: every node must be [t, value]");
          return std::nullopt;
        }
        nodes.push_back({p[0].get<double>(), p[1].get<double>()});
      }
      return kind == "step" ? Schedule::step(std::move(nodes)) : Schedule::linear(std::move(nodes));
    }
    errors.push_back(where + ": unknown schedule kind '" + kind + "'");
    return std::nullopt;
  }

  std::optional<Marginal> marginal(const json& v, const std::string& where) {
    if (v.is_number()) return Marginal::point(v.get<double>());
    if (!v.is_object() || !v.contains("kind") || !v.at("kind").is_string()) {
      errors.push_back(where + ": expected a number or an object with a string 'kind'");
      return std::nullopt;
    }
    const auto kind = v.at("kind").get<std::string>();
    if (kind == "point") {
      allow(v, where, {"kind", "value"});
      if (auto x = number(v, where, "value", true)) return Marginal::point(*x);
    } else if (kind == "uniform") {
      allow(v, where, {"kind", "lo", "hi"});
      auto lo = number(v, where, "lo", true);
      auto hi = number(v, where, "hi", true);
      if (lo && hi) {
        if (!(*lo < *hi)) errors.push_back(where + ": uniform needs lo < hi");
        return Marginal::uniform(*lo, *hi);
      }
    } else if (kind == "normal") {
      allow(v, where, {"kind", "mean", "sd"});
      auto mean = number(v, where, "mean", true);
      auto sd = number(v, where, "sd", true);
      if (mean && sd) {
        if (!(*sd >= 0.0)) errors.push_back(where + ": normal needs sd >= 0");
        return Marginal::normal(*mean, *sd);
      }
    } else {
      errors.push_back(where + ": unknown distribution kind '" + kind + "'");
    }
    return std::nullopt;
  }
};

inline json schedule_json(const Schedule& s) {
  json j;
  j["kind"] = to_string(s.kind());
  switch (s.kind()) {
    case ScheduleKind::constant: j["value"] = s.scalar(); break;
    case ScheduleKind::twap: j["horizon"] = s.scalar(); break;
    default: {
      json nodes = json::array();
      for (const auto& n : s.nodes()) nodes.push_back(json::array({n.t, n.value}));
      j["nodes"] = std::move(nodes);
    }
  }
  return j;
}

inline json marginal_json(const Marginal& m) {
  json j;
  j["kind"] = to_string(m.kind);
  switch (m.kind) {
    case Marginal::Kind::point: j["value"] = m.first; break;
    case Marginal::Kind::uniform:
      j["lo"] = m.first;
      j["hi"] = m.second;
      break;
    case Marginal::Kind::normal:
      j["mean"] = m.first;
      j["sd"] = m.second;
      break;
  }
  return j;
}

}  // namespace detail

inline io::json to_json(const RunConfig& c) {
  using io::json;
  json j;
  j["market"] = {{"T", c.market.horizon},
                 {"n", c.market.supply},
                 {"c1", c.market.impact},
                 {"dividend_mean", c.market.dividend_mean},
                 {"sigma", detail::schedule_json(c.market.sigma)}};
  j["kappa"] = detail::schedule_json(c.market.kappa);
  j["gamma"] = detail::schedule_json(c.market.gamma);
  if (c.targets) {
    j["targets"] = {{"a1", c.targets->a1}, {"a2", c.targets->a2}};
  } else if (c.prior) {
    j["targets"] = {{"distribution",
                     {{"a1", detail::marginal_json(c.prior->a1)},
                      {"a2", detail::marginal_json(c.prior->a2)}}}};
  }
  json fee = json::object();
  if (c.fee.lambda) fee["lambda"] = *c.fee.lambda;
  if (c.fee.search_lo || c.fee.search_hi) {
    json search = json::object();
    if (c.fee.search_lo) search["lo"] = *c.fee.search_lo;
    if (c.fee.search_hi) search["hi"] = *c.fee.search_hi;
    fee["search"] = std::move(search);
  }
  j["fee"] = std::move(fee);
  j["rng"] = {{"seed", c.seed}};
  j["output"] = {{"dir", c.out_dir}};
  const auto& o = c.options;
  json opts = {{"grid", o.grid},         {"trials", o.trials},   {"samples", o.samples},
               {"steps", o.steps},       {"paths", o.paths},     {"threads", o.threads},
               {"method", to_string(o.method)}};
  json curve = {{"points", o.curve_points}};
  if (o.curve_lo) curve["lo"] = *o.curve_lo;
  if (o.curve_hi) curve["hi"] = *o.curve_hi;
  opts["curve"] = std::move(curve);
  opts["c1_values"] = o.c1_values;
  j["options"] = std::move(opts);
  return j;
}

inline std::string dump_config(const RunConfig& c) { return io::dump(to_json(c)); }

inline ProfitMethod parse_method(const std::string& s) {
  if (s == "mc") return ProfitMethod::monte_carlo;
  if (s == "quadrature") return ProfitMethod::quadrature;
  throw ValidationError({"method must be 'mc' or 'quadrature', got '" + s + "'"});
}

/// Builds a RunConfig from parsed JSON. Model constraints (c1 > -1/2,
/// monotone gamma, ...) are checked by validate_config, not here.
inline RunConfig config_from_json(const io::json& j) {
  using io::json;
  detail::Reader r;
  RunConfig c;
  r.allow(j, "config", {"market", "kappa", "gamma", "targets", "fee", "rng", "output", "options"});
  if (!j.is_object()) throw ValidationError(r.errors);

  if (!j.contains("market")) {
    r.errors.push_back("market: missing");
  } else {
    const auto& m = j.at("market");
    r.allow(m, "market", {"T", "n", "c1", "dividend_mean", "sigma"});
    if (auto v = r.number(m, "market", "T", true)) c.market.horizon = *v;
    if (auto v = r.number(m, "market", "n", true)) c.market.supply = *v;
    if (auto v = r.number(m, "market", "c1", true)) c.market.impact = *v;
    if (auto v = r.number(m, "market", "dividend_mean", false)) c.market.dividend_mean = *v;
    if (m.is_object() && m.contains("sigma")) {
      if (auto s = r.schedule(m.at("sigma"), "market.sigma", c.market.horizon)) c.market.sigma = *s;
    }
  }
  for (const char* name : {"kappa", "gamma"}) {
    if (!j.contains(name)) {
      r.errors.push_back(std::string(name) + ": missing");
      continue;
    }
    if (auto s = r.schedule(j.at(name), name, c.market.horizon)) {
      (std::string(name) == "kappa" ? c.market.kappa : c.market.gamma) = *s;
    }
  }

  if (!j.contains("targets")) {
    r.errors.push_back("targets: missing");
  } else {
    const auto& t = j.at("targets");
    r.allow(t, "targets", {"a1", "a2", "distribution"});
    const bool has_point = t.is_object() && (t.contains("a1") || t.contains("a2"));
    const bool has_dist = t.is_object() && t.contains("distribution");
    if (has_point == has_dist) {
      r.errors.push_back("targets: give exactly one of {a1, a2} or distribution");
    } else if (has_point) {
      auto a1 = r.number(t, "targets", "a1", true);
      auto a2 = r.number(t, "targets", "a2", true);
      if (a1 && a2) c.targets = TargetPair{*a1, *a2};
    } else {
      const auto& d = t.at("distribution");
      r.allow(d, "targets.distribution", {"a1", "a2"});
      if (!d.is_object() || !d.contains("a1") || !d.contains("a2")) {
        r.errors.push_back("targets.distribution: needs a1 and a2");
      } else {
        auto m1 = r.marginal(d.at("a1"), "targets.distribution.a1");
        auto m2 = r.marginal(d.at("a2"), "targets.distribution.a2");
        if (m1 && m2) c.prior = TargetPrior{*m1, *m2};
      }
    }
  }

  if (j.contains("fee")) {
    const auto& f = j.at("fee");
    r.allow(f, "fee", {"lambda", "search"});
    c.fee.lambda = r.number(f, "fee", "lambda", false);
    if (f.is_object() && f.contains("search")) {
      const auto& s = f.at("search");
      r.allow(s, "fee.search", {"lo", "hi"});
      c.fee.search_lo = r.number(s, "fee.search", "lo", false);
      c.fee.search_hi = r.number(s, "fee.search", "hi", false);
    }
  }
  if (j.contains("rng")) {
    r.allow(j.at("rng"), "rng", {"seed"});
    if (auto s = r.integer<std::uint64_t>(j.at("rng"), "rng", "seed")) c.seed = *s;
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    r.allow(o, "output", {"dir"});
    if (o.is_object() && o.contains("dir")) {
      if (o.at("dir").is_string()) c.out_dir = o.at("dir").get<std::string>();
      else r.errors.push_back("output.dir: expected a string");
    }
  }
  if (j.contains("options")) {
    const auto& o = j.at("options");
    auto& opt = c.options;
    r.allow(o, "options",
            {"grid", "trials", "samples", "steps", "paths", "threads", "method", "curve", "c1_values"});
    if (auto v = r.integer<std::size_t>(o, "options", "grid")) opt.grid = *v;
    if (auto v = r.integer<std::size_t>(o, "options", "trials")) opt.trials = *v;
    if (auto v = r.integer<std::size_t>(o, "options", "samples")) opt.samples = *v;
    if (auto v = r.integer<std::size_t>(o, "options", "steps")) opt.steps = *v;
    if (auto v = r.integer<std::size_t>(o, "options", "paths")) opt.paths = *v;
    if (auto v = r.integer<unsigned>(o, "options", "threads")) opt.threads = *v;
    if (o.is_object() && o.contains("method")) {
      if (!o.at("method").is_string()) {
        r.errors.push_back("options.method: expected a string");
      } else {
        try {
          opt.method = parse_method(o.at("method").get<std::string>());
        } catch (const ValidationError& e) {
          r.errors.insert(r.errors.end(), e.violations().begin(), e.violations().end());
        }
      }
    }
    if (o.is_object() && o.contains("curve")) {
      const auto& cv = o.at("curve");
      r.allow(cv, "options.curve", {"points", "lo", "hi"});
      if (auto v = r.integer<std::size_t>(cv, "options.curve", "points")) opt.curve_points = *v;
      opt.curve_lo = r.number(cv, "options.curve", "lo", false);
      opt.curve_hi = r.number(cv, "options.curve", "hi", false);
    }
    if (o.is_object() && o.contains("c1_values")) {
      const auto& v = o.at("c1_values");
      if (!v.is_array()) {
        r.errors.push_back("options.c1_values: expected an array of numbers");
      } else {
        for (const auto& x : v) {
          if (x.is_number()) opt.c1_values.push_back(x.get<double>());
          else r.errors.push_back("options.c1_values: expected an array of numbers");
        }
      }
    }
  }
  if (!r.errors.empty()) throw ValidationError(r.errors);
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  io::json j;
  try {
    j = io::json::parse(text);
  } catch (const io::json::parse_error& e) {
    throw ValidationError({std::string("config is not valid JSON: ") + e.what()});
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ValidationError({"cannot read config file " + path.string()});
  std::ostringstream text;
  text << file.rdbuf();
  return parse_config(text.str());
}

/// Model and option constraints; empty when the config is usable.
inline std::vector<std::string> check_config(const RunConfig& c) {
  auto bad = check(c.market);
  if (c.fee.lambda && !(*c.fee.lambda > 0.0)) bad.push_back("fee.lambda must be > 0");
  if (c.fee.search_lo && !(*c.fee.search_lo > 0.0)) bad.push_back("fee.search.lo must be > 0");
  if (c.fee.search_lo && c.fee.search_hi && !(*c.fee.search_hi > *c.fee.search_lo)) {
    bad.push_back("fee.search needs lo < hi");
  }
  const auto& o = c.options;
  if (o.grid < 2) bad.push_back("options.grid must be >= 2");
  if (o.trials < 1) bad.push_back("options.trials must be >= 1");
  if (o.samples < 2) bad.push_back("options.samples must be >= 2");
  if (o.steps < 2) bad.push_back("options.steps must be >= 2");
  if (o.paths < 1) bad.push_back("options.paths must be >= 1");
  if (o.curve_points < 2) bad.push_back("options.curve.points must be >= 2");
  if (o.curve_lo && !(*o.curve_lo > 0.0)) bad.push_back("options.curve.lo must be > 0");
  if (o.curve_lo && o.curve_hi && !(*o.curve_hi > *o.curve_lo)) {
    bad.push_back("options.curve needs lo < hi");
  }
  for (double c1 : o.c1_values) {
    if (!(c1 > -0.5)) bad.push_back("options.c1_values: every c1 must be > -1/2");
  }
  return bad;
}

inline void validate_config(const RunConfig& c) {
  auto bad = check_config(c);
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

}  // namespace impacteq
