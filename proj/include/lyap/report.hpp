#pragma once

// JSON records and CSV tables for every result type. Floating-point values go
// through nlohmann's shortest round-trip formatting (JSON) or "%.17g" (CSV),
// so identical results give byte-identical files. NaN is written as null / "nan".

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lyap/exponents.hpp"
#include "lyap/green.hpp"
#include "lyap/scaling_lab.hpp"
#include "lyap/walk.hpp"

namespace lyap {

using json = nlohmann::json;

inline std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json estimate_to_json(const ExponentEstimate& e) {
  json j = {{"value", e.value},
            {"method", to_string(e.method)},
            {"k_range", {e.k_range.lo, e.k_range.hi}},
            {"stat_error", e.stat_error},
            {"first_half_slope", e.first_half_slope},
            {"second_half_slope", e.second_half_slope},
            {"censored_fraction", e.censored_fraction},
            {"missed_fraction", e.missed_fraction},
            {"seed", e.seed},
            {"samples", e.samples}};
  j["truncation_bracket"] = e.truncation_bracket ? json{e.truncation_bracket->first, e.truncation_bracket->second} : json();
  json curve = json::array();
  for (std::size_t i = 0; i < e.ks.size(); ++i) curve.push_back({{"k", e.ks[i]}, {"y", e.curve[i]}});
  j["curve"] = curve;
  return j;
}

/// Decay curve: method,k,y with y = -ln q(k).
inline void write_curve_csv(std::ostream& os, const std::vector<ExponentEstimate>& es) {
  os << "method,k,y\n";
  for (const auto& e : es)
    for (std::size_t i = 0; i < e.ks.size(); ++i) os << to_string(e.method) << ',' << e.ks[i] << ',' << csv_num(e.curve[i]) << '\n';
}

inline json sweep_to_json(const SweepReport& r, const SweepPlan& plan) {
  json pts = json::array();
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    json q = {{"gamma", p.gamma},
              {"ratio", p.ratio},
              {"ratio_error", p.ratio_error},
              {"distance", p.distance},
              {"within_tolerance", p.within_tolerance},
              {"k_range", {plan.budget(i).k_range_at(p.gamma).lo, plan.budget(i).k_range_at(p.gamma).hi}}};
    q["estimate"] = p.estimate ? estimate_to_json(*p.estimate) : json();
    if (!p.error.empty()) q["error"] = p.error;
    pts.push_back(q);
  }
  return {{"experiment", "scaling"},
          {"method", to_string(plan.method)},
          {"potential", plan.spec.describe()},
          {"target", r.target},
          {"tolerance", plan.tolerance},
          {"relative_tolerance", plan.relative_tolerance},
          {"trend", {{"slope", r.trend.slope}, {"intercept", r.trend.intercept}}},
          {"min_gamma_within_tolerance", r.min_gamma_within_tolerance},
          {"all_within_tolerance", r.all_within_tolerance},
          {"distance_decreasing", r.distance_decreasing},
          {"distance_decreasing_within_error", r.distance_decreasing_within_error},
          {"criterion", r.criterion},
          {"pass", r.pass},
          {"points", pts}};
}

/// gamma,method,value,stderr,ratio,target,pass
inline void write_sweep_csv(std::ostream& os, const SweepReport& r, const SweepPlan& plan) {
  os << "gamma,method,value,stderr,ratio,target,pass\n";
  for (const auto& p : r.points) {
    const double v = p.estimate ? p.estimate->value : std::nan("");
    const double s = p.estimate ? p.estimate->stat_error : std::nan("");
    os << csv_num(p.gamma) << ',' << to_string(plan.method) << ',' << csv_num(v) << ',' << csv_num(s) << ','
       << csv_num(p.estimate ? p.ratio : std::nan("")) << ',' << csv_num(r.target) << ',' << (p.within_tolerance ? 1 : 0)
       << '\n';
  }
}

inline json mean_to_json(const MeanEstimate& m) { return {{"mean", m.mean}, {"stderr", m.stderr}, {"samples", m.samples}}; }

inline json laplace_to_json(const LaplaceReport& r) {
  json pts = json::array();
  for (const auto& p : r.points) {
    json q = {{"gamma", p.gamma}, {"estimate", mean_to_json(p.estimate)}, {"tolerance", p.tolerance}, {"pass", p.pass}};
    q["quarter_gamma_estimate"] = p.quarter ? mean_to_json(*p.quarter) : json();
    pts.push_back(q);
  }
  return {{"experiment", "laplace"}, {"d", r.d}, {"c", r.c}, {"target", r.target}, {"pass", r.pass}, {"points", pts}};
}

/// gamma,estimate,stderr,quarter_estimate,target,tolerance,pass
inline void write_laplace_csv(std::ostream& os, const LaplaceReport& r) {
  os << "gamma,estimate,stderr,quarter_estimate,target,tolerance,pass\n";
  for (const auto& p : r.points)
    os << csv_num(p.gamma) << ',' << csv_num(p.estimate.mean) << ',' << csv_num(p.estimate.stderr) << ','
       << csv_num(p.quarter ? p.quarter->mean : std::nan("")) << ',' << csv_num(r.target) << ',' << csv_num(p.tolerance)
       << ',' << (p.pass ? 1 : 0) << '\n';
}

inline json example3_to_json(const Example3Report& r) {
  json pts = json::array();
  for (const auto& p : r.points)
    pts.push_back({{"gamma", p.gamma},
                   {"estimate", p.estimate},
                   {"stderr", p.stderr},
                   {"bound", p.bound},
                   {"ratio", p.ratio},
                   {"truncated_fraction", p.truncated_fraction},
                   {"below_bound", p.below_bound}});
  return {{"experiment", "example3"},
          {"bounds_hold", r.bounds_hold},
          {"ratio_decreasing", r.ratio_decreasing},
          {"truncation_flag", r.truncation_flag},
          {"pass", r.pass},
          {"points", pts}};
}

/// gamma,estimate,stderr,bound,ratio,truncated_fraction,pass
inline void write_example3_csv(std::ostream& os, const Example3Report& r) {
  os << "gamma,estimate,stderr,bound,ratio,truncated_fraction,pass\n";
  for (const auto& p : r.points)
    os << csv_num(p.gamma) << ',' << csv_num(p.estimate) << ',' << csv_num(p.stderr) << ',' << csv_num(p.bound) << ','
       << csv_num(p.ratio) << ',' << csv_num(p.truncated_fraction) << ',' << (p.below_bound ? 1 : 0) << '\n';
}

inline json example4_to_json(const Example4Report& r) {
  json pts = json::array();
  for (const auto& p : r.points) {
    json q = {{"gamma", p.gamma},
              {"bound", p.bound},
              {"half_cuberoot", p.half_cuberoot},
              {"ratio", p.ratio},
              {"exceeds", p.exceeds},
              {"annealed_consistent", p.annealed_consistent}};
    q["annealed"] = p.annealed ? estimate_to_json(*p.annealed) : json();
    pts.push_back(q);
  }
  return {{"experiment", "example4"},
          {"bounds_hold", r.bounds_hold},
          {"ratio_increasing", r.ratio_increasing},
          {"pass", r.pass},
          {"points", pts}};
}

/// gamma,bound,half_cuberoot,ratio,annealed,annealed_stderr,pass
inline void write_example4_csv(std::ostream& os, const Example4Report& r) {
  os << "gamma,bound,half_cuberoot,ratio,annealed,annealed_stderr,pass\n";
  for (const auto& p : r.points)
    os << csv_num(p.gamma) << ',' << csv_num(p.bound) << ',' << csv_num(p.half_cuberoot) << ',' << csv_num(p.ratio) << ','
       << csv_num(p.annealed ? p.annealed->value : std::nan("")) << ','
       << csv_num(p.annealed ? p.annealed->stat_error : std::nan("")) << ','
       << (p.exceeds && p.annealed_consistent ? 1 : 0) << '\n';
}

inline json ledger_to_json(const InvariantLedger& l) {
  json rs = json::array();
  for (const auto& r : l.results)
    rs.push_back({{"suite", r.suite}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  return {{"all_passed", l.all_passed()}, {"results", rs}};
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

/// suite,name,passed,detail
inline void write_ledger_csv(std::ostream& os, const InvariantLedger& l) {
  os << "suite,name,passed,detail\n";
  for (const auto& r : l.results)
    os << r.suite << ',' << csv_quote(r.name) << ',' << (r.passed ? 1 : 0) << ',' << csv_quote(r.detail) << '\n';
}

inline json slab_to_json(const SlabReport& r) {
  return {{"paths", r.paths},
          {"dropped", r.dropped},
          {"K", r.K},
          {"correlation", r.correlation},
          {"correlation_stderr", r.correlation_stderr},
          {"max_consecutive_z", r.max_consecutive_z},
          {"ks_statistic", r.ks_statistic},
          {"ks_critical", r.ks_critical},
          {"independent", r.independent()},
          {"identically_distributed", r.identically_distributed()}};
}

/// path_id,T_1..T_K,H,Hbar,weight_log  (H empty when kl was not visited)
/// Censored paths (step budget exhausted) keep their row with empty fields,
/// so path_id always equals the per-path seed index.
inline void write_paths_csv(std::ostream& os, const std::vector<std::optional<WalkRecord>>& recs, std::int64_t K) {
  os << "path_id";
  for (std::int64_t i = 1; i <= K; ++i) os << ",T_" << i;
  os << ",H,Hbar,weight_log\n";
  for (std::size_t p = 0; p < recs.size(); ++p) {
    os << p;
    if (!recs[p]) {
      for (std::int64_t i = 0; i < K + 3; ++i) os << ',';
      os << '\n';
      continue;
    }
    const auto& r = *recs[p];
    for (std::int64_t i = 1; i <= K; ++i) {
      os << ',';
      if (static_cast<std::size_t>(i) < r.stop_times.size()) os << r.stop_times[static_cast<std::size_t>(i)];
    }
    os << ',';
    if (r.hit_step) os << *r.hit_step;
    os << ',';
    if (r.halfspace_step) os << *r.halfspace_step;
    os << ',' << csv_num(r.weight_log) << '\n';
  }
}

inline void write_paths_csv(std::ostream& os, const std::vector<WalkRecord>& recs, std::int64_t K) {
  write_paths_csv(os, std::vector<std::optional<WalkRecord>>(recs.begin(), recs.end()), K);
}

}  // namespace lyap
