#pragma once

// Experiment configuration: a JSON document mapping onto PotentialSpec,
// estimator options and sweep plans. Unknown keys are rejected at every level
// so a typo cannot silently fall back to a default.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lyap/exponents.hpp"
#include "lyap/green.hpp"
#include "lyap/potential.hpp"
#include "lyap/scaling_lab.hpp"

namespace lyap {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Malformed or inconsistent configuration (a usage error, not a run failure).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

/// Strict view of one JSON object: every key must be consumed before finish().
class StrictObject {
 public:
  StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    used_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key) {
    const json& v = raw(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  template <typename T>
  std::optional<T> maybe(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return get<T>(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

inline KRange parse_krange(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": expected [lo, hi]");
  KRange r{j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
  try {
    r.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return r;
}

inline Site parse_site(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty integer array");
  std::vector<std::int64_t> c;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ConfigError(where + ": lattice coordinates must be integers");
    c.push_back(v.get<std::int64_t>());
  }
  if (c.size() > static_cast<std::size_t>(kMaxDim)) throw ConfigError(where + ": dimension above 8");
  return Site(c);
}

}  // namespace detail

inline PotentialSpec parse_potential(const json& j, const std::string& where = "potential") {
  detail::StrictObject o(j, where);
  PotentialSpec s;
  try {
    s.family = family_from_string(o.get<std::string>("family"));
    const json& ps = o.raw("params");
    s.params.clear();
    if (!ps.is_array()) throw ConfigError(o.path("params") + ": expected an array");
    for (const auto& v : ps) {
      // JSON has no infinity literal; "inf" stands for +inf (an impassable site).
      if (v.is_string() && v.get<std::string>() == "inf") s.params.push_back(kInf);
      else if (v.is_number()) s.params.push_back(v.get<double>());
      else throw ConfigError(o.path("params") + ": entries must be numbers or \"inf\"");
    }
    s.scaling = scaling_from_string(o.get<std::string>("scaling", std::string("raw")));
    s.gamma = o.get<double>("gamma", 1.0);
    o.finish();
    s.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

inline json potential_to_json(const PotentialSpec& s) {
  json params = json::array();
  for (double v : s.params) params.push_back(std::isinf(v) ? json("inf") : json(v));
  return {{"family", to_string(s.family)}, {"params", params}, {"scaling", to_string(s.scaling)}, {"gamma", s.gamma}};
}

struct Config {
  std::string command;  // optional in the file; must match the subcommand when present
  std::uint64_t seed = 0;
  std::optional<PotentialSpec> potential;
  std::optional<Site> ell;
  std::optional<Method> method;
  std::optional<KRange> k_range;
  std::optional<std::pair<double, double>> k_scaled;
  std::size_t paths = 0;
  std::size_t samples = 0;
  std::vector<std::int64_t> box_schedule;
  SolveOptions solve{};
  MonteCarloOptions mc{};
  double truncation_threshold = 0.05;

  // passage / green
  std::optional<Site> target;
  std::string kind = "green";  // green | operator

  // hitting
  std::optional<double> gamma;
  std::int64_t k = 1;
  std::int64_t stops = 3;  // K for the slab statistics
  std::optional<double> laplace_c;

  // sweep
  std::string experiment = "scaling";  // scaling | laplace | example3 | example4
  std::vector<double> gamma_grid;
  double tolerance = 0.1;
  bool relative_tolerance = true;
  std::vector<SweepBudget> budgets;
  std::int64_t max_radius = 1'000'000;

  // check
  std::string suite = "all";
  double scale = 1.0;

  int dim() const {
    if (!ell) throw ConfigError("config: 'ell' is required");
    return ell->dim();
  }
};

namespace detail {

inline SweepBudget parse_budget(const json& j, const std::string& where) {
  StrictObject o(j, where);
  SweepBudget b;
  b.paths = o.get<std::size_t>("paths", b.paths);
  b.samples = o.get<std::size_t>("samples", b.samples);
  if (o.has("k_range")) b.k_range = parse_krange(o.raw("k_range"), o.path("k_range"));
  if (o.has("k_scaled")) {
    const auto v = o.get<std::vector<double>>("k_scaled");
    if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] >= v[0])) throw ConfigError(o.path("k_scaled") + ": expected [a, b], 0 < a <= b");
    b.k_scaled = std::make_pair(v[0], v[1]);
  }
  b.radius = o.get<std::int64_t>("radius", b.radius);
  o.finish();
  return b;
}

inline json budget_to_json(const SweepBudget& b) {
  json j = {{"paths", b.paths}, {"samples", b.samples}, {"k_range", {b.k_range.lo, b.k_range.hi}}, {"radius", b.radius}};
  if (b.k_scaled) j["k_scaled"] = {b.k_scaled->first, b.k_scaled->second};
  return j;
}

}  // namespace detail

inline Config parse_config(const json& j) {
  detail::StrictObject o(j, "config");
  Config c;
  try {
    if (o.has("schema_version") && o.get<int>("schema_version") != kSchemaVersion)
      throw ConfigError("config: unsupported schema_version");
    c.command = o.get<std::string>("command", std::string());
    c.seed = o.get<std::uint64_t>("seed", 0);
    if (o.has("potential")) c.potential = parse_potential(o.raw("potential"));
    if (o.has("ell")) c.ell = detail::parse_site(o.raw("ell"), "config.ell");
    if (o.has("method")) c.method = method_from_string(o.get<std::string>("method"));
    if (o.has("k_range")) c.k_range = detail::parse_krange(o.raw("k_range"), "config.k_range");
    if (o.has("k_scaled")) {
      const auto v = o.get<std::vector<double>>("k_scaled");
      if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] >= v[0])) throw ConfigError("config.k_scaled: expected [a, b], 0 < a <= b");
      c.k_scaled = std::make_pair(v[0], v[1]);
    }
    c.paths = o.get<std::size_t>("paths", 0);
    c.samples = o.get<std::size_t>("samples", 0);
    c.box_schedule = o.get<std::vector<std::int64_t>>("box_schedule", {});
    c.truncation_threshold = o.get<double>("truncation_threshold", c.truncation_threshold);
    if (o.has("solve")) {
      detail::StrictObject s(o.raw("solve"), "config.solve");
      c.solve.method = solve_method_from_string(s.get<std::string>("method", to_string(c.solve.method)));
      c.solve.tolerance = s.get<double>("tolerance", c.solve.tolerance);
      c.solve.max_sweeps = s.get<std::int64_t>("max_sweeps", c.solve.max_sweeps);
      s.finish();
      c.solve.validate();
    }
    if (o.has("monte_carlo")) {
      detail::StrictObject m(o.raw("monte_carlo"), "config.monte_carlo");
      if (m.has("theta")) c.mc.theta = m.get<double>("theta");
      c.mc.margin_nats = m.get<double>("margin_nats", c.mc.margin_nats);
      c.mc.step_budget = m.get<std::int64_t>("step_budget", c.mc.step_budget);
      c.mc.blocks = m.get<std::size_t>("blocks", c.mc.blocks);
      c.mc.max_censored = m.get<double>("max_censored", c.mc.max_censored);
      m.finish();
    }
    if (o.has("target")) c.target = detail::parse_site(o.raw("target"), "config.target");
    c.kind = o.get<std::string>("kind", c.kind);
    if (c.kind != "green" && c.kind != "operator") throw ConfigError("config.kind: expected 'green' or 'operator'");
    c.gamma = o.maybe<double>("gamma");
    c.k = o.get<std::int64_t>("k", c.k);
    c.stops = o.get<std::int64_t>("stops", c.stops);
    c.laplace_c = o.maybe<double>("laplace_c");
    c.experiment = o.get<std::string>("experiment", c.experiment);
    if (c.experiment != "scaling" && c.experiment != "laplace" && c.experiment != "example3" && c.experiment != "example4")
      throw ConfigError("config.experiment: expected scaling | laplace | example3 | example4");
    c.gamma_grid = o.get<std::vector<double>>("gamma_grid", {});
    c.tolerance = o.get<double>("tolerance", c.tolerance);
    c.relative_tolerance = o.get<bool>("relative_tolerance", c.relative_tolerance);
    if (o.has("budgets")) {
      const json& b = o.raw("budgets");
      if (b.is_object()) {
        c.budgets.push_back(detail::parse_budget(b, "config.budgets"));
      } else if (b.is_array()) {
        for (std::size_t i = 0; i < b.size(); ++i)
          c.budgets.push_back(detail::parse_budget(b[i], "config.budgets[" + std::to_string(i) + "]"));
      } else {
        throw ConfigError("config.budgets: expected an object or an array of objects");
      }
    }
    c.max_radius = o.get<std::int64_t>("max_radius", c.max_radius);
    c.suite = o.get<std::string>("suite", c.suite);
    suite_from_string(c.suite);
    c.scale = o.get<double>("scale", c.scale);
    o.finish();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

/// Normalized form with every default spelled out; hashed into config_hash and
/// copied into the manifest. Re-parsing it yields the same Config.
inline json config_to_json(const Config& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  if (!c.command.empty()) j["command"] = c.command;
  j["seed"] = c.seed;
  if (c.potential) j["potential"] = potential_to_json(*c.potential);
  if (c.ell) j["ell"] = c.ell->coords();
  if (c.method) j["method"] = to_string(*c.method);
  if (c.k_range) j["k_range"] = {c.k_range->lo, c.k_range->hi};
  if (c.k_scaled) j["k_scaled"] = {c.k_scaled->first, c.k_scaled->second};
  j["paths"] = c.paths;
  j["samples"] = c.samples;
  j["box_schedule"] = c.box_schedule;
  j["truncation_threshold"] = c.truncation_threshold;
  j["solve"] = {{"method", to_string(c.solve.method)}, {"tolerance", c.solve.tolerance}, {"max_sweeps", c.solve.max_sweeps}};
  json mc = {{"margin_nats", c.mc.margin_nats},
             {"step_budget", c.mc.step_budget},
             {"blocks", c.mc.blocks},
             {"max_censored", c.mc.max_censored}};
  if (!std::isnan(c.mc.theta)) mc["theta"] = c.mc.theta;
  j["monte_carlo"] = mc;
  if (c.target) j["target"] = c.target->coords();
  j["kind"] = c.kind;
  if (c.gamma) j["gamma"] = *c.gamma;
  j["k"] = c.k;
  j["stops"] = c.stops;
  if (c.laplace_c) j["laplace_c"] = *c.laplace_c;
  j["experiment"] = c.experiment;
  j["gamma_grid"] = c.gamma_grid;
  j["tolerance"] = c.tolerance;
  j["relative_tolerance"] = c.relative_tolerance;
  json b = json::array();
  for (const auto& x : c.budgets) b.push_back(detail::budget_to_json(x));
  j["budgets"] = b;
  j["max_radius"] = c.max_radius;
  j["suite"] = c.suite;
  j["scale"] = c.scale;
  return j;
}

/// Sweep plan from a config: budgets default to the top-level paths/samples/k
/// settings when no explicit "budgets" entry is given.
inline SweepPlan sweep_plan_from_config(const Config& c) {
  if (!c.potential) throw ConfigError("sweep: 'potential' is required");
  if (!c.method) throw ConfigError("sweep: 'method' is required");
  SweepPlan p;
  p.spec = *c.potential;
  p.gamma_grid = c.gamma_grid;
  p.ell = c.ell ? *c.ell : throw ConfigError("sweep: 'ell' is required");
  p.method = *c.method;
  if (!c.budgets.empty()) {
    p.budgets = c.budgets;
  } else {
    SweepBudget b;
    if (c.paths) b.paths = c.paths;
    if (c.samples) b.samples = c.samples;
    if (c.k_range) b.k_range = *c.k_range;
    b.k_scaled = c.k_scaled;
    if (!c.box_schedule.empty()) b.radius = c.box_schedule.back();
    p.budgets = {b};
  }
  p.tolerance = c.tolerance;
  p.relative_tolerance = c.relative_tolerance;
  p.seed = c.seed;
  p.solve = c.solve;
  p.mc = c.mc;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

}  // namespace lyap
