// lyap_cli: command-line front end for the Lyapunov-exponent library.
//
// Exit codes: 0 ok, 1 a requested check failed, 2 usage/config error,
// 3 run-time failure (solver, budget, truncation), 4 refused to overwrite.

#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lyap/config.hpp"
#include "lyap/io.hpp"
#include "lyap/log.hpp"
#include "lyap/lyap.hpp"
#include "lyap/report.hpp"

namespace {

using lyap::json;

enum Exit { kOk = 0, kCheckFailed = 1, kUsage = 2, kRuntime = 3, kOverwrite = 4 };

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out;
  bool force = false;
  std::vector<std::string> formats{"json", "csv"};

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "master seed (overrides the config)");
    app->add_option("--threads", threads, "worker threads (0 = machine parallelism)");
    app->add_option("--out", out, "output directory (default: JSON to stdout, no files)");
    app->add_flag("--force", force, "overwrite existing output files");
    app->add_option("--format", formats, "output formats among json,csv,svg (json is always written)")
        ->delimiter(',')
        ->check(CLI::IsMember({"json", "csv", "svg"}));
  }
  bool wants(const std::string& f) const {
    return f == "json" || std::find(formats.begin(), formats.end(), f) != formats.end();
  }
};

/// What a subcommand produces: a JSON result, optional CSV/SVG bodies and a verdict.
struct Outcome {
  json result;
  std::string csv;
  std::string svg;
  bool passed = true;
  std::string summary;
};

std::vector<double> parse_reals(const std::string& s, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw lyap::ConfigError(std::string(what) + ": expected a comma-separated list of numbers");
    }
  }
  if (v.empty()) throw lyap::ConfigError(std::string(what) + ": empty list");
  return v;
}

lyap::Site require_ell(const lyap::Config& c, const char* cmd) {
  if (!c.ell) throw lyap::ConfigError(std::string(cmd) + ": 'ell' is required");
  return *c.ell;
}

lyap::PotentialSpec require_potential(const lyap::Config& c, const char* cmd) {
  if (!c.potential) throw lyap::ConfigError(std::string(cmd) + ": 'potential' is required");
  return *c.potential;
}

lyap::KRange require_krange(const lyap::Config& c, const char* cmd) {
  if (!c.k_range) throw lyap::ConfigError(std::string(cmd) + ": 'k_range' is required");
  return *c.k_range;
}

lyap::SolverEstimatorOptions solver_options(const lyap::Config& c, unsigned threads, const char* cmd) {
  if (c.box_schedule.empty()) throw lyap::ConfigError(std::string(cmd) + ": 'box_schedule' is required");
  lyap::SolverEstimatorOptions o;
  o.box_schedule = c.box_schedule;
  o.solve = c.solve;
  o.truncation_threshold = c.truncation_threshold;
  o.threads = threads;
  return o;
}

std::string estimate_summary(const lyap::ExponentEstimate& e) {
  std::ostringstream o;
  o.precision(10);
  o << lyap::to_string(e.method) << ": " << e.value;
  if (e.stat_error > 0) o << " +- " << e.stat_error;
  return o.str();
}

// --- subcommands -----------------------------------------------------------

Outcome cmd_exact(int d, double gamma, const std::string& ell_text) {
  const lyap::Direction ell(parse_reals(ell_text, "--ell"));
  if (ell.dim() != d) throw lyap::ConfigError("exact: --ell has " + std::to_string(ell.dim()) + " components, --d is " + std::to_string(d));
  const auto e = lyap::exact_constant_exponent(d, gamma, ell);
  Outcome out;
  out.result = lyap::estimate_to_json(e);
  out.result["d"] = d;
  out.result["gamma"] = gamma;
  out.result["ell"] = ell.components();
  std::ostringstream csv;
  csv << "d,gamma,ell,value\n" << d << ',' << lyap::csv_num(gamma) << ",\"" << ell_text << "\"," << lyap::csv_num(e.value) << '\n';
  out.csv = csv.str();
  out.summary = estimate_summary(e);
  return out;
}

Outcome cmd_hyperplane(const lyap::Config& c, std::optional<double> gamma_flag, const std::string& ell_flag,
                       std::size_t paths_flag, const std::string& k_flag, unsigned threads) {
  const double gamma = gamma_flag ? *gamma_flag : c.gamma ? *c.gamma : throw lyap::ConfigError("hyperplane: gamma is required");
  lyap::Direction ell;
  if (!ell_flag.empty()) {
    ell = lyap::Direction(parse_reals(ell_flag, "--ell"));
  } else {
    ell = lyap::Direction(require_ell(c, "hyperplane"));
  }
  const int d = ell.dim();
  Outcome out;
  const auto mart = lyap::hyperplane_exponent_martingale(d, gamma, ell);
  const auto exact = lyap::exact_constant_exponent(d, gamma, ell);
  out.result["gamma"] = gamma;
  out.result["ell"] = ell.components();
  out.result["martingale"] = lyap::estimate_to_json(mart);
  out.result["point_exponent"] = lyap::estimate_to_json(exact);
  out.summary = estimate_summary(mart);
  std::vector<lyap::ExponentEstimate> curves;
  const std::size_t paths = paths_flag ? paths_flag : c.paths;
  if (paths > 0) {
    lyap::KRange kr = c.k_range ? *c.k_range : lyap::KRange{10, 20};
    if (!k_flag.empty()) {
      const auto v = parse_reals(k_flag, "--k");
      if (v.size() != 2) throw lyap::ConfigError("--k: expected lo,hi");
      kr = {static_cast<std::int64_t>(v[0]), static_cast<std::int64_t>(v[1])};
    }
    auto mc = c.mc;
    mc.threads = threads;
    const auto est = lyap::hyperplane_exponent_mc(d, gamma, ell, kr, paths, c.seed, mc);
    out.result["monte_carlo"] = lyap::estimate_to_json(est);
    const double sig = est.stat_error;
    out.result["mc_agrees_within_3_sigma"] = std::abs(est.value - mart.value) <= 3.0 * sig;
    out.summary += "; " + estimate_summary(est);
    curves.push_back(est);
  }
  std::ostringstream csv;
  lyap::write_curve_csv(csv, curves);
  out.csv = csv.str();
  return out;
}

lyap::ScalarField potential_field(const lyap::Config& c, const char* cmd) {
  const auto spec = require_potential(c, cmd);
  if (c.box_schedule.empty()) throw lyap::ConfigError(std::string(cmd) + ": 'box_schedule' (radius) is required");
  const int d = c.target ? c.target->dim() : throw lyap::ConfigError(std::string(cmd) + ": 'target' is required");
  return lyap::sample_field(spec, lyap::BoxRegion(d, c.box_schedule.back()), c.seed);
}

json solution_json(const lyap::FieldSolution& s) {
  return {{"residual", s.residual}, {"sweeps_used", s.sweeps_used}, {"contraction", s.contraction}};
}

std::string field_csv(const lyap::ScalarField& f) {
  std::ostringstream o;
  lyap::write_field_csv(o, f);
  return o.str();
}

Outcome cmd_passage(const lyap::Config& c) {
  const auto v = potential_field(c, "passage");
  const auto sol = lyap::solve_passage(v, *c.target, c.solve);
  Outcome out;
  const auto origin = lyap::Site::origin(v.box.dim());
  out.result = {{"potential", c.potential->describe()},
                {"radius", v.box.radius()},
                {"target", c.target->coords()},
                {"solve_method", lyap::to_string(c.solve.method)},
                {"e_origin", sol.field.at(origin)},
                {"solution", solution_json(sol)}};
  out.csv = field_csv(sol.field);
  std::ostringstream s;
  s.precision(12);
  s << "e(0, " << c.target->str() << ") = " << sol.field.at(origin);
  out.summary = s.str();
  return out;
}

Outcome cmd_green(const lyap::Config& c) {
  const auto v = potential_field(c, "green");
  const auto& y = *c.target;
  const auto origin = lyap::Site::origin(v.box.dim());
  Outcome out;
  if (c.kind == "operator") {
    const auto sol = lyap::solve_operator_green(v, y, c.solve);
    const auto id = lyap::operator_correspondence_check(v, y, c.solve);
    out.result = {{"kind", "operator"},
                  {"G_origin", sol.field.at(origin)},
                  {"G_target", sol.field.at(y)},
                  {"solution", solution_json(sol)},
                  {"identity", {{"name", id.name}, {"residual", id.residual}}}};
    out.csv = field_csv(sol.field);
    out.passed = id.holds(1e-9);
    out.summary = "G(0,y) = " + lyap::detail::fmt(sol.field.at(origin));
  } else {
    const auto sol = lyap::solve_green_column(v, y, c.solve);
    const auto f = lyap::factorization_check(v, y, c.solve);
    const auto g = lyap::geometric_return_check(v, y, c.solve);
    out.result = {{"kind", "green"},
                  {"g_origin", sol.field.at(origin)},
                  {"g_target", sol.field.at(y)},
                  {"solution", solution_json(sol)},
                  {"identities",
                   {{{"name", f.name}, {"residual", f.residual}}, {{"name", g.name}, {"residual", g.residual}}}}};
    out.csv = field_csv(sol.field);
    out.passed = f.holds(1e-9) && g.holds(1e-9);
    out.summary = "g(0,y) = " + lyap::detail::fmt(sol.field.at(origin));
  }
  out.result["potential"] = c.potential->describe();
  out.result["radius"] = v.box.radius();
  out.result["target"] = y.coords();
  return out;
}

Outcome cmd_quenched(const lyap::Config& c, unsigned threads) {
  const auto spec = require_potential(c, "quenched");
  if (c.method && *c.method != lyap::Method::quenched_solver)
    throw lyap::ConfigError("quenched: method must be quenched_solver");
  if (c.samples == 0) throw lyap::ConfigError("quenched: 'samples' is required");
  const auto e = lyap::quenched_exponent(spec, require_ell(c, "quenched"), require_krange(c, "quenched"), c.samples,
                                         solver_options(c, threads, "quenched"), c.seed);
  Outcome out;
  out.result = lyap::estimate_to_json(e);
  out.result["potential"] = spec.describe();
  std::ostringstream csv;
  lyap::write_curve_csv(csv, {e});
  out.csv = csv.str();
  out.summary = estimate_summary(e);
  return out;
}

Outcome cmd_annealed(const lyap::Config& c, unsigned threads) {
  const auto spec = require_potential(c, "annealed");
  const auto method = c.method.value_or(lyap::Method::annealed_direct);
  const auto ell = require_ell(c, "annealed");
  const auto kr = require_krange(c, "annealed");
  lyap::ExponentEstimate e;
  if (method == lyap::Method::annealed_direct) {
    if (c.samples == 0) throw lyap::ConfigError("annealed: 'samples' is required");
    e = lyap::annealed_exponent_direct(spec, ell, kr, c.samples, solver_options(c, threads, "annealed"), c.seed);
  } else if (method == lyap::Method::annealed_localtime) {
    if (c.paths == 0) throw lyap::ConfigError("annealed: 'paths' is required");
    auto mc = c.mc;
    mc.threads = threads;
    e = lyap::annealed_exponent_localtime(spec, ell, kr, c.paths, c.seed, mc);
  } else {
    throw lyap::ConfigError("annealed: method must be annealed_direct or annealed_localtime");
  }
  Outcome out;
  out.result = lyap::estimate_to_json(e);
  out.result["potential"] = spec.describe();
  std::ostringstream csv;
  lyap::write_curve_csv(csv, {e});
  out.csv = csv.str();
  out.summary = estimate_summary(e);
  return out;
}

Outcome cmd_sweep(const lyap::Config& c, unsigned threads) {
  Outcome out;
  std::ostringstream csv;
  if (c.experiment == "scaling") {
    auto plan = lyap::sweep_plan_from_config(c);
    plan.mc.threads = threads;
    const auto rep = lyap::run_scaling_sweep(plan);
    out.result = lyap::sweep_to_json(rep, plan);
    lyap::write_sweep_csv(csv, rep, plan);
    lyap::SvgSeries s;
    s.label = "value / sqrt(gamma)";
    for (const auto& p : rep.points) {
      s.x.push_back(p.gamma);
      s.y.push_back(p.estimate ? p.ratio : std::nan(""));
      s.err.push_back(p.ratio_error);
    }
    out.svg = lyap::svg_ratio_plot(s, rep.target, plan.spec.describe() + " (" + lyap::to_string(plan.method) + ")");
    out.passed = rep.pass;
    out.summary = "target " + lyap::detail::fmt(rep.target) + ", ratio at smallest gamma " +
                  lyap::detail::fmt(rep.points.back().ratio) + (rep.pass ? " [pass]" : " [fail]");
  } else if (c.experiment == "laplace") {
    if (!c.laplace_c) throw lyap::ConfigError("sweep/laplace: 'laplace_c' is required");
    if (c.gamma_grid.empty() || c.paths < 2) throw lyap::ConfigError("sweep/laplace: 'gamma_grid' and 'paths' are required");
    const lyap::Direction ell(require_ell(c, "sweep/laplace"));
    const auto rep = lyap::laplace_limit_check(ell.dim(), ell, *c.laplace_c, c.gamma_grid, c.paths, c.seed, threads);
    out.result = lyap::laplace_to_json(rep);
    lyap::write_laplace_csv(csv, rep);
    out.passed = rep.pass;
    out.summary = "target " + lyap::detail::fmt(rep.target) + ", estimate " + lyap::detail::fmt(rep.points.back().estimate.mean) +
                  (rep.pass ? " [pass]" : " [fail]");
  } else if (c.experiment == "example3") {
    if (c.gamma_grid.empty() || c.samples == 0) throw lyap::ConfigError("sweep/example3: 'gamma_grid' and 'samples' are required");
    const auto rep = lyap::example3_check(c.gamma_grid, c.samples, c.max_radius, c.seed, threads);
    out.result = lyap::example3_to_json(rep);
    lyap::write_example3_csv(csv, rep);
    out.passed = rep.pass;
    out.summary = std::string("example 3 ") + (rep.pass ? "[pass]" : "[fail]");
  } else {
    if (c.gamma_grid.empty()) throw lyap::ConfigError("sweep/example4: 'gamma_grid' is required");
    auto mc = c.mc;
    mc.threads = threads;
    const auto rep = lyap::example4_check(c.gamma_grid, c.paths, c.seed, mc);
    out.result = lyap::example4_to_json(rep);
    lyap::write_example4_csv(csv, rep);
    out.passed = rep.pass;
    out.summary = std::string("example 4 ") + (rep.pass ? "[pass]" : "[fail]");
  }
  out.csv = csv.str();
  return out;
}

Outcome cmd_hitting(const lyap::Config& c, unsigned threads) {
  const double gamma = c.gamma ? *c.gamma : throw lyap::ConfigError("hitting: 'gamma' is required");
  if (c.paths < 2) throw lyap::ConfigError("hitting: 'paths' (>= 2) is required");
  const lyap::Direction ell(require_ell(c, "hitting"));
  const int d = ell.dim();
  const auto upper = lyap::slab_upper_count(ell, gamma, c.k);
  const auto lower = lyap::slab_lower_count(ell, gamma, c.k);
  // Hitting times are heavy-tailed; a path that exhausts the step budget is
  // censored and counted, the invariants are per-path statements.
  std::vector<std::optional<lyap::WalkRecord>> recs(c.paths);
  lyap::parallel_for(c.paths, threads, [&](std::size_t p) {
    try {
      recs[p] = lyap::run_to_halfspace(d, ell, gamma, c.k, lyap::derive_seed(c.seed, p), c.mc.step_budget);
    } catch (const lyap::BudgetExceeded&) {
    }
  });
  std::size_t bracket = 0, order = 0, overshoot = 0, hits = 0, censored = 0;
  const double level = static_cast<double>(c.k) * ell.self_dot();
  for (const auto& opt : recs) {
    if (!opt) {
      ++censored;
      continue;
    }
    const auto& r = *opt;
    const auto H = *r.halfspace_step;
    bracket += !(r.stop_times[static_cast<std::size_t>(lower)] <= H && H <= r.stop_times[static_cast<std::size_t>(upper)]);
    if (r.hit_step) {
      ++hits;
      order += !(H <= *r.hit_step);
    }
    overshoot += !(*r.halfspace_projection < level + ell.norm_inf());
  }
  Outcome out;
  out.result = {{"gamma", gamma},
                {"ell", ell.components()},
                {"k", c.k},
                {"paths", c.paths},
                {"censored_paths", censored},
                {"m_k", lower},
                {"M_k", upper},
                {"bracket_violations", bracket},
                {"order_violations", order},
                {"overshoot_violations", overshoot},
                {"point_hits_recorded", hits}};
  out.passed = bracket == 0 && order == 0 && overshoot == 0 && censored < c.paths / 2;
  if (c.stops >= 2) {
    const auto slab = lyap::slab_pieces_statistics(d, ell, gamma, c.stops, c.paths, lyap::derive_seed(c.seed, 1, 0), threads,
                                                   c.mc.step_budget);
    out.result["slab"] = lyap::slab_to_json(slab);
    out.passed = out.passed && slab.independent() && slab.identically_distributed();
  }
  if (c.laplace_c) {
    const auto m = lyap::laplace_estimate(d, ell, gamma, *c.laplace_c, c.paths, lyap::derive_seed(c.seed, 2, 0), threads,
                                          c.mc.step_budget);
    out.result["laplace"] = {{"c", *c.laplace_c}, {"estimate", lyap::mean_to_json(m)},
                             {"limit", lyap::laplace_limit(d, ell, *c.laplace_c)}};
  }
  out.result["pass"] = out.passed;
  std::ostringstream csv;
  lyap::write_paths_csv(csv, recs, upper);
  out.csv = csv.str();
  out.summary = "bracket violations " + std::to_string(bracket) + ", order violations " + std::to_string(order) +
                (out.passed ? " [pass]" : " [fail]");
  return out;
}

Outcome cmd_check(const lyap::Config& c, unsigned threads) {
  const auto led = lyap::invariant_suite(c.seed, lyap::suite_from_string(c.suite), c.scale, threads);
  Outcome out;
  out.result = lyap::ledger_to_json(led);
  out.result["suite"] = c.suite;
  out.result["scale"] = c.scale;
  std::ostringstream csv;
  lyap::write_ledger_csv(csv, led);
  out.csv = csv.str();
  out.passed = led.all_passed();
  std::size_t failed = 0;
  for (const auto& r : led.results) failed += !r.passed;
  out.summary = std::to_string(led.results.size() - failed) + "/" + std::to_string(led.results.size()) + " invariants hold";
  for (const auto& r : led.results)
    if (!r.passed) out.summary += "\n  FAILED [" + r.suite + "] " + r.name + ": " + r.detail;
  return out;
}

// --- driver ----------------------------------------------------------------

json envelope(const std::string& command, const json& config, const std::string& status) {
  return {{"schema_version", lyap::kSchemaVersion},
          {"tool_version", lyap::kToolVersion},
          {"command", command},
          {"config_hash", lyap::sha256_hex(config.dump())},
          {"seed", config.value("seed", std::uint64_t{0})},
          {"status", status}};
}

/// Usage failures before a config exists still produce a JSON record.
int usage_failure(const std::string& command, const std::string& message) {
  json record = envelope(command, json::object(), "usage_error");
  record["error"] = message;
  std::cerr << "error: " << message << '\n';
  std::cout << record.dump(2) << '\n';
  return kUsage;
}

int emit(const std::string& command, const Common& common, const lyap::Config& cfg, const std::string& started,
         const std::function<Outcome()>& run) {
  const json config = lyap::config_to_json(cfg);
  std::optional<lyap::OutputDir> dir;
  if (!common.out.empty()) {
    dir.emplace(common.out, common.force);
    std::vector<std::string> names{command + ".json", "manifest.json"};
    if (common.wants("csv")) names.push_back(command + ".csv");
    if (common.wants("svg")) names.push_back(command + ".svg");
    try {
      dir->plan(names);
    } catch (const lyap::OverwriteRefused& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kOverwrite;
    }
  }

  Outcome out;
  int code = kOk;
  json record;
  try {
    out = run();
    record = envelope(command, config, out.passed ? "pass" : "fail");
    record["result"] = out.result;
    code = out.passed ? kOk : kCheckFailed;
  } catch (const lyap::ConfigError& e) {
    record = envelope(command, config, "usage_error");
    record["error"] = e.what();
    code = kUsage;
  } catch (const std::invalid_argument& e) {
    record = envelope(command, config, "usage_error");
    record["error"] = e.what();
    code = kUsage;
  } catch (const std::exception& e) {
    record = envelope(command, config, "runtime_error");
    record["error"] = e.what();
    code = kRuntime;
  }
  if (record.contains("error")) std::cerr << "error: " << record["error"].get<std::string>() << '\n';
  spdlog::info("{} finished with status {}", command, record["status"].get<std::string>());

  const std::string body = record.dump(2) + "\n";
  if (!dir) {
    std::cout << body;
    return code;
  }
  dir->write(command + ".json", body);
  if (code == kOk || code == kCheckFailed) {
    if (common.wants("csv") && !out.csv.empty()) dir->write(command + ".csv", out.csv);
    if (common.wants("svg") && !out.svg.empty()) dir->write(command + ".svg", out.svg);
  }
  lyap::Manifest m;
  m.config = config;
  m.master_seed = cfg.seed;
  m.command = command;
  m.started = started;
  m.finished = lyap::utc_timestamp();
  m.exit_code = code;
  dir->write("manifest.json", m.to_json(*dir).dump(2) + "\n");
  if (!out.summary.empty()) std::cout << out.summary << '\n';
  return code;
}

lyap::Config load(const Common& common, const std::string& command) {
  lyap::Config c = common.config_path.empty() ? lyap::Config{} : lyap::load_config(common.config_path);
  if (!c.command.empty() && c.command != command)
    throw lyap::ConfigError("config is for '" + c.command + "', not '" + command + "'");
  c.command = command;
  if (common.seed) c.seed = *common.seed;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  lyap::init_logging();
  const std::string started = lyap::utc_timestamp();
  CLI::App app{"Lyapunov exponents of random walks in random potentials"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lyap::kToolVersion);

  Common common;
  std::function<int()> action;

  auto* exact = app.add_subcommand("exact", "closed-form exponent for a constant potential");
  int d = 0;
  double gamma = 0.0;
  std::string ell;
  exact->add_option("--d", d, "dimension")->required()->check(CLI::Range(1, lyap::kMaxDim));
  exact->add_option("--gamma", gamma, "potential value")->required();
  exact->add_option("--ell", ell, "direction, comma separated")->required();
  common.attach(exact);
  exact->callback([&] {
    action = [&] {
      lyap::Config c;
      try {
        c = load(common, "exact");
      } catch (const lyap::ConfigError& e) {
        return usage_failure("exact", e.what());
      }
      c.gamma = gamma;
      return emit("exact", common, c, started, [&] { return cmd_exact(d, gamma, ell); });
    };
  });

  auto* hyper = app.add_subcommand("hyperplane", "point-to-hyperplane exponent (martingale form, optional Monte Carlo)");
  std::optional<double> hgamma;
  std::string hell, hk;
  std::size_t hpaths = 0;
  hyper->add_option("--gamma", hgamma, "potential value");
  hyper->add_option("--ell", hell, "direction, comma separated");
  hyper->add_option("--paths", hpaths, "Monte Carlo paths (0 = closed form only)");
  hyper->add_option("--k", hk, "k range lo,hi for Monte Carlo");
  common.attach(hyper);
  hyper->callback([&] {
    action = [&] {
      lyap::Config c;
      try {
        c = load(common, "hyperplane");
      } catch (const lyap::ConfigError& e) {
        return usage_failure("hyperplane", e.what());
      }
      if (hgamma) c.gamma = hgamma;
      if (hpaths) c.paths = hpaths;
      return emit("hyperplane", common, c, started,
                  [&] { return cmd_hyperplane(c, hgamma, hell, hpaths, hk, common.threads); });
    };
  });

  using Adjust = std::function<void(lyap::Config&)>;
  auto simple = [&](const char* name, const char* help, std::function<Outcome(const lyap::Config&)> fn, bool need_config,
                    Adjust adjust = {}) {
    auto* sub = app.add_subcommand(name, help);
    common.attach(sub);
    sub->callback([&, name, fn, need_config, adjust] {
      action = [&, name, fn, need_config, adjust] {
        if (need_config && common.config_path.empty()) return usage_failure(name, "--config is required");
        lyap::Config c;
        try {
          c = load(common, name);
          if (adjust) adjust(c);
        } catch (const lyap::ConfigError& e) {
          return usage_failure(name, e.what());
        }
        return emit(name, common, c, started, [&] { return fn(c); });
      };
    });
    return sub;
  };

  simple("passage", "passage function e(., y, V) on a box", [](const lyap::Config& c) { return cmd_passage(c); }, true);
  simple("green", "Green's function column g(., y, V) or operator Green G", [](const lyap::Config& c) { return cmd_green(c); },
         true);
  simple("quenched", "quenched exponent via exact box solves",
         [&](const lyap::Config& c) { return cmd_quenched(c, common.threads); }, true);
  simple("annealed", "annealed exponent (direct solves or local-time Monte Carlo)",
         [&](const lyap::Config& c) { return cmd_annealed(c, common.threads); }, true);
  simple("sweep", "scaling sweep, Laplace limit, or counterexample experiment",
         [&](const lyap::Config& c) { return cmd_sweep(c, common.threads); }, true);
  simple("hitting", "walk stopping-time statistics and path dump",
         [&](const lyap::Config& c) { return cmd_hitting(c, common.threads); }, true);

  std::string suite;
  double scale = 0.0;
  auto* check = simple(
      "check", "invariant suites; exit 0 iff all pass", [&](const lyap::Config& c) { return cmd_check(c, common.threads); },
      false, [&](lyap::Config& c) {
        if (!suite.empty()) c.suite = suite;
        if (scale > 0.0) c.scale = scale;
      });
  check->add_option("--suite", suite, "paths | identities | closed_form | ordering | counterexamples | all")
      ->check(CLI::IsMember({"paths", "identities", "closed_form", "ordering", "counterexamples", "all"}));
  check->add_option("--scale", scale, "multiplier on the statistical budgets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::ParseError& e) {
    const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
    return usage_failure(sub ? sub->get_name() : std::string(), e.what());
  }
  try {
    return action ? action() : int(kUsage);
  } catch (const lyap::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
